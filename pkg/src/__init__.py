"""
schwinger-sim: трансмон, ёмкостно связанный с LC-резонатором, в базисе Швингера.

Основные компоненты:
- DeviceParams / derive_modes: параметры цепи и канонические моды
- AngularBasis: базис |S, mS⟩ двух бозонных мод
- perturb: собственные пары по теории возмущений Рэлея–Шрёдингера
- build_lambda / evolve: тензор диссипации и эволюция уравнения Линдблада
- steady_state: асимптотика двухуровневой линии
- run_two_state / run_g_sweep / run_ladder: численные эксперименты
"""

from src.core.basis import AngularBasis, AngularIndex, build_basis
from src.core.device import DeviceParams, DissipationRates, critical_coupling, derive_modes
from src.core.errors import (
    ConfigError,
    CriticalCouplingExceeded,
    DegeneracyError,
    DivisionHazard,
    NonPhysicalState,
    SimulationError,
    StepSizeTooLarge,
)
from src.core.lindblad import DriveTone, DriveWaveform, build_gamma, build_lambda, evolve
from src.core.perturbation import EigenSystem, perturb
from src.core.spectroscopy import SweepPlan, prepare_system, run_g_sweep, run_ladder, run_two_state
from src.core.steadystate import steady_state
from src.core.types import Experiment, Mode, SteadyStateConvention

__version__ = "1.0.0"

__all__ = [
    # Модель
    "DeviceParams",
    "DissipationRates",
    "AngularBasis",
    "AngularIndex",
    "EigenSystem",
    "DriveTone",
    "DriveWaveform",
    "SweepPlan",
    # Операции
    "critical_coupling",
    "derive_modes",
    "build_basis",
    "perturb",
    "build_gamma",
    "build_lambda",
    "evolve",
    "steady_state",
    "prepare_system",
    "run_two_state",
    "run_g_sweep",
    "run_ladder",
    # Типы
    "Experiment",
    "Mode",
    "SteadyStateConvention",
    # Ошибки
    "SimulationError",
    "ConfigError",
    "CriticalCouplingExceeded",
    "DegeneracyError",
    "StepSizeTooLarge",
    "NonPhysicalState",
    "DivisionHazard",
    "__version__",
]
