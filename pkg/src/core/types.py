"""Общие перечисления и типы для schwinger-sim."""

from enum import Enum


class Mode(Enum):
    """Канонические лестницы ↑/↓ (численное значение σ = ±1)."""

    UP = "up"
    DOWN = "down"

    @property
    def sign(self) -> int:
        return 1 if self is Mode.UP else -1

    @property
    def index(self) -> int:
        return 0 if self is Mode.UP else 1

    @property
    def symbol(self) -> str:
        return "↑" if self is Mode.UP else "↓"


class LadderKind(Enum):
    """Тип лестничного оператора."""

    ANNIHILATE = "annihilate"
    CREATE = "create"


class Experiment(Enum):
    """Численные эксперименты спектроскопии."""

    TWO_STATE_SWEEP = "two_state_sweep"
    G_SWEEP = "g_sweep"
    LADDER = "ladder"


class SteadyStateConvention(Enum):
    """Как трактовать комплексный Λ в асимптотике ρ22."""

    AS_PRINTED = "as_printed"
    REAL_PART = "real_part"
    MAGNITUDE = "magnitude"
