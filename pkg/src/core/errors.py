"""
Иерархия исключений симулятора.

Каждое исключение несёт машиночитаемый `code` и `exit_code` для CLI:
ошибки конфигурации дают 1, численные сбои дают 2.
"""


class SimulationError(Exception):
    """Базовая ошибка симулятора."""

    code = "simulation"
    exit_code = 2


class ConfigError(SimulationError, ValueError):
    """Невалидная конфигурация или нарушенный инвариант входных данных."""

    code = "config"
    exit_code = 1


class CriticalCouplingExceeded(SimulationError):
    """g ≥ g_c: мода ↓ размягчается до нуля (неустойчивость)."""

    code = "critical_coupling"


class DegeneracyError(SimulationError):
    """Связанная пара уровней вырождена в пределах допуска теории возмущений."""

    code = "degeneracy"


class StepSizeTooLarge(SimulationError):
    """Шаг dt не разрешает самую быструю фазовую скорость."""

    code = "step_size"


class NonPhysicalState(SimulationError):
    """Матрица плотности ушла за бюджет эрмитовости/следа."""

    code = "non_physical"


class DivisionHazard(SimulationError):
    """Нулевой знаменатель в асимптотических формулах."""

    code = "division_hazard"
