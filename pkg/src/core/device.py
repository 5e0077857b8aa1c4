"""
Параметры устройства и нормальные (канонические) моды.

Единицы: частоты и энергии в рад/нс ("GHz" в тексте), напряжения в нВ,
L в пГн, C в нФ. Энергии в мкэВ переводятся через UEV_TO_RAD_PER_NS.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, List, Tuple
import logging
import math

import numpy as np

from src.core.errors import ConfigError, CriticalCouplingExceeded
from src.core.types import Mode

logger = logging.getLogger(__name__)

# ═══════════════════════════════════════════════════════════════
# Единицы и константы
# ═══════════════════════════════════════════════════════════════

GHZ = 1.0
MHZ = 1e-3
KHZ = 1e-6

UEV_TO_RAD_PER_NS = 1.519267
HBAR_SI = 1.054571817e-34

# (рад/нс)/нВ при Z = 1 Ом: 1e-9 (В/нВ) * 1e-9 (с/нс) / sqrt(2ħ)
DRIVE_CONSTANT = 1e-18 / math.sqrt(2.0 * HBAR_SI)

# Порог предупреждения: E_C > 0.1 * 12 * ω↓
ANHARMONICITY_WARN_FRACTION = 0.1


@dataclass(frozen=True)
class DissipationRates:
    """Скорости γ′± (симметричные) и γ± (антисимметричные), рад/нс."""

    gamma_prime_plus: float = 100 * KHZ
    gamma_plus: float = 10 * KHZ
    gamma_prime_minus: float = 10 * KHZ
    gamma_minus: float = 1 * KHZ

    def __post_init__(self):
        for name in ("gamma_prime_plus", "gamma_plus", "gamma_prime_minus", "gamma_minus"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ConfigError(f"{name} must be a finite non-negative rate, got {value}")
        if self.gamma_prime_plus < self.gamma_plus:
            raise ConfigError("gamma_prime_plus must be >= gamma_plus (non-negative excitation rate)")
        if self.gamma_prime_minus < self.gamma_minus:
            raise ConfigError("gamma_prime_minus must be >= gamma_minus (non-negative excitation rate)")

    def bare(self, mu: int, m: int) -> float:
        """γ(μ, m): m=+1 это γ′+γ (распад), m=-1 это γ′-γ (возбуждение)."""
        if mu > 0:
            sym, anti = self.gamma_prime_plus, self.gamma_plus
        else:
            sym, anti = self.gamma_prime_minus, self.gamma_minus
        return sym + m * anti

    def scaled(self, factor: float) -> "DissipationRates":
        return DissipationRates(
            gamma_prime_plus=self.gamma_prime_plus * factor,
            gamma_plus=self.gamma_plus * factor,
            gamma_prime_minus=self.gamma_prime_minus * factor,
            gamma_minus=self.gamma_minus * factor,
        )


@dataclass(frozen=True)
class DeviceParams:
    """
    Физические константы LC-резонатора и трансмона.

    L (пГн), C (нФ), E_C и E_J (рад/нс), g (рад/нс), rates.
    """

    L: float = 10.0
    C: float = 1.0
    E_C: float = 0.165 * UEV_TO_RAD_PER_NS
    E_J: float = 8.24 * UEV_TO_RAD_PER_NS
    g: float = 5 * MHZ
    rates: DissipationRates = field(default_factory=DissipationRates)

    def __post_init__(self):
        for name in ("L", "C", "E_C", "E_J"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ConfigError(f"{name} must be positive, got {value}")
        if not math.isfinite(self.g) or self.g < 0:
            raise ConfigError(f"g must be non-negative, got {self.g}")
        g_c = critical_coupling(self)
        if self.g >= g_c:
            raise CriticalCouplingExceeded(
                f"g={self.g:.6g} rad/ns is at or above the critical coupling g_c={g_c:.6g} rad/ns"
            )

    @property
    def omega_plus(self) -> float:
        """ω+ = 1/sqrt(LC) в рад/нс."""
        return 1e-9 / math.sqrt(self.L * 1e-12 * self.C * 1e-9)

    @property
    def omega_minus(self) -> float:
        """ω− = sqrt(8 E_C E_J)."""
        return math.sqrt(8.0 * self.E_C * self.E_J)

    @property
    def impedance(self) -> float:
        """Z = sqrt(L/C) в Омах."""
        return math.sqrt(self.L * 1e-12 / (self.C * 1e-9))

    @property
    def g_tilde(self) -> float:
        return self.g * math.sqrt(self.omega_minus / self.E_C)

    def with_coupling(self, g: float) -> "DeviceParams":
        return replace(self, g=g)

    def with_rates(self, rates: DissipationRates) -> "DeviceParams":
        return replace(self, rates=rates)


@dataclass(frozen=True)
class CanonicalModes:
    """
    Частоты мод ↑/↓ и коэффициенты смешивания ξ(σ, μ).

    xi[σ.index, μ_index], где μ_index 0 для резонатора (+) и 1 для трансмона (−).
    drive[σ.index] это v_σ в (рад/нс)/нВ.
    """

    omega_plus: float
    omega_minus: float
    omega_up: float
    omega_down: float
    g_tilde: float
    xi: np.ndarray
    drive: np.ndarray

    def __post_init__(self):
        self.xi.setflags(write=False)
        self.drive.setflags(write=False)

    def frequency(self, mode: Mode) -> float:
        return self.omega_up if mode is Mode.UP else self.omega_down

    def bare_frequency(self, mu: int) -> float:
        return self.omega_plus if mu > 0 else self.omega_minus

    def mixing(self, mode: Mode, mu: int) -> float:
        """ξ(σ, μ), μ = +1 (резонатор) или −1 (трансмон)."""
        return float(self.xi[mode.index, 0 if mu > 0 else 1])

    def drive_coefficient(self, mode: Mode) -> float:
        return float(self.drive[mode.index])

    def to_dict(self) -> Dict:
        return {
            "omega_plus": self.omega_plus,
            "omega_minus": self.omega_minus,
            "omega_up": self.omega_up,
            "omega_down": self.omega_down,
            "g_tilde": self.g_tilde,
            "xi_up_plus": float(self.xi[0, 0]),
            "xi_up_minus": float(self.xi[0, 1]),
            "xi_down_plus": float(self.xi[1, 0]),
            "xi_down_minus": float(self.xi[1, 1]),
            "v_up": float(self.drive[0]),
            "v_down": float(self.drive[1]),
        }


@dataclass(frozen=True)
class WeakCouplingResiduals:
    """Отклонение точных ω↑/ω↓ от слабосвязанных асимптот."""

    up: float
    down: float

    @property
    def worst(self) -> float:
        return max(abs(self.up), abs(self.down))


def critical_coupling(params: DeviceParams) -> float:
    """g_c: g̃_c = 2 sqrt(ω+ ω−), пересчитанное обратно в g."""
    omega_p, omega_m = params.omega_plus, params.omega_minus
    g_tilde_c = 2.0 * math.sqrt(omega_p * omega_m)
    return g_tilde_c / math.sqrt(omega_m / params.E_C)


def _mixing_matrix(omega_p: float, omega_m: float, omega_up: float, omega_down: float) -> np.ndarray:
    bare = (omega_p, omega_m)
    dressed = (omega_up, omega_down)
    xi = np.zeros((2, 2))
    for s in range(2):
        w_s, w_sbar = dressed[s], dressed[1 - s]
        for u in range(2):
            w_u, w_ubar = bare[u], bare[1 - u]
            ratio = (w_s / w_u) * (w_ubar**2 - w_s**2) / (w_sbar**2 - w_s**2)
            # округление при малых g может дать -0.0…
            xi[s, u] = math.sqrt(max(ratio, 0.0))
    return xi


def derive_modes(params: DeviceParams) -> CanonicalModes:
    """Диагонализовать квадратичную часть: ω↑, ω↓, ξ(σ, μ), v_σ."""
    omega_p, omega_m = params.omega_plus, params.omega_minus
    g_tilde = params.g_tilde

    if params.g == 0.0:
        if omega_p >= omega_m:
            omega_up, omega_down = omega_p, omega_m
            xi = np.eye(2)
        else:
            omega_up, omega_down = omega_m, omega_p
            xi = np.array([[0.0, 1.0], [1.0, 0.0]])
    else:
        total = omega_p**2 + omega_m**2
        disc = math.sqrt((omega_p**2 - omega_m**2) ** 2 + g_tilde**2 * omega_p * omega_m)
        down_sq = 0.5 * (total - disc)
        if down_sq <= 0.0:
            raise CriticalCouplingExceeded(
                f"omega_down^2={down_sq:.3e} <= 0 at g={params.g:.6g} rad/ns"
            )
        omega_up = math.sqrt(0.5 * (total + disc))
        omega_down = math.sqrt(down_sq)
        xi = _mixing_matrix(omega_p, omega_m, omega_up, omega_down)

    k_drive = DRIVE_CONSTANT / math.sqrt(params.impedance)
    drive = np.array([
        k_drive * (omega_p / omega_up) * xi[0, 0],
        k_drive * (omega_p / omega_down) * xi[1, 0],
    ])

    if params.E_C > ANHARMONICITY_WARN_FRACTION * 12.0 * omega_down:
        logger.warning(
            f"E_C={params.E_C:.4g} is not small compared to 12*omega_down={12.0 * omega_down:.4g}; "
            "second-order perturbation theory may be inaccurate"
        )

    logger.debug(
        f"Modes: omega_up={omega_up:.6f}, omega_down={omega_down:.6f}, g_tilde={g_tilde:.6f}"
    )
    return CanonicalModes(
        omega_plus=omega_p,
        omega_minus=omega_m,
        omega_up=omega_up,
        omega_down=omega_down,
        g_tilde=g_tilde,
        xi=xi,
        drive=drive,
    )


def weak_coupling_check(modes: CanonicalModes) -> WeakCouplingResiduals:
    """Остаток относительно ω↑ ≈ ω+ + g̃²ω−/8Δ и ω↓ ≈ ω− − g̃²ω+/8Δ."""
    omega_p, omega_m = modes.omega_plus, modes.omega_minus
    delta = omega_p**2 - omega_m**2
    if delta == 0.0:
        raise ConfigError("weak-coupling asymptotes require omega_plus != omega_minus")
    shift = modes.g_tilde**2 / (8.0 * delta)
    return WeakCouplingResiduals(
        up=modes.omega_up - (omega_p + shift * omega_m),
        down=modes.omega_down - (omega_m - shift * omega_p),
    )


def modes_vs_g(params: DeviceParams, g_grid: List[float]) -> List[Tuple[float, CanonicalModes]]:
    """Табулировать канонические моды по сетке g (все g < g_c)."""
    return [(float(g), derive_modes(params.with_coupling(float(g)))) for g in g_grid]
