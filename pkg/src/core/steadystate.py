"""
Замкнутая асимптотика двухуровневого отклика (ℰ = {1, 2}) и её сверка с RK4.
"""

from dataclasses import dataclass, replace
from typing import Dict, Optional
import logging
import math

import numpy as np

from src.core.errors import ConfigError, DivisionHazard
from src.core.lindblad import DensityTrajectory, LambdaTensor
from src.core.types import SteadyStateConvention

logger = logging.getLogger(__name__)

# Порог предупреждения о мнимой части ρ22 (конвенция as_printed)
IMAGINARY_RESIDUE_WARN = 1e-9


@dataclass(frozen=True)
class SteadyStateModel:
    """Коэффициенты Λ после применения конвенции плюс θ12, θ21, ε21, Vo."""

    lambda_22_11: float
    lambda_11_11: float
    lambda_12_12: complex
    lambda_21_12: complex
    theta12: complex
    theta21: complex
    eps21: float
    vo: float
    convention: SteadyStateConvention = SteadyStateConvention.AS_PRINTED

    def __post_init__(self):
        if self.difference == 0.0:
            raise DivisionHazard("Lambda^(2,2)_(1,1) - Lambda^(1,1)_(1,1) vanishes")
        if self.lambda_12_12 == 0:
            raise DivisionHazard("Lambda^(1,2)_(1,2) vanishes: coherence time is infinite")
        if self.eps21 == 0.0:
            raise DivisionHazard("transition frequency eps21 is zero")

    @property
    def difference(self) -> float:
        return self.lambda_22_11 - self.lambda_11_11

    @property
    def total(self) -> float:
        return self.lambda_22_11 + self.lambda_11_11

    @property
    def tau(self) -> float:
        """Время когерентности τ = 1/|Λ^{(1,2)}_{1,2}|."""
        return 1.0 / abs(self.lambda_12_12)

    @property
    def linewidth(self) -> float:
        """Δ21 = (1/τ)·sqrt(1 + ½|θ12|²Vo²τ²)."""
        tau = self.tau
        return math.sqrt(1.0 + 0.5 * abs(self.theta12) ** 2 * self.vo**2 * tau**2) / abs(tau)

    @property
    def shifted_eps21(self) -> float:
        """ε̃21: сдвиг резонанса, квадратичный по Vo."""
        numer = 2.0 * abs(self.theta12) ** 2 * self.lambda_12_12 + (
            self.theta12**2 + self.theta21**2
        ) * self.lambda_21_12
        shift = numer / (4.0 * self.eps21 * self.difference) * self.vo**2
        return float(self.eps21 - complex(shift).real)

    def _lorentz(self, omega: np.ndarray) -> np.ndarray:
        return (np.asarray(omega) - self.shifted_eps21) ** 2 + self.linewidth**2

    def rho22_complex(self, omega) -> np.ndarray:
        """ρ22 до взятия вещественной части (мнимая часть ненулевая только для as_printed)."""
        drive = (
            0.5 * (self.total / self.difference) * abs(self.theta12) ** 2 * self.lambda_12_12
            * self.vo**2 / self._lorentz(omega)
        )
        return -(self.lambda_11_11 + drive) / self.difference

    def rho22(self, omega) -> np.ndarray:
        return np.real(self.rho22_complex(omega))

    def rho12_envelope(self, omega) -> np.ndarray:
        """Комплексная амплитуда при e^{iΩt}."""
        return (
            0.5 * (self.total / self.difference) * self.theta12 * self.lambda_12_12
            * self.vo / self._lorentz(omega)
        )

    def sz(self, omega) -> np.ndarray:
        return -0.5 * self.rho22(omega)

    def with_amplitude(self, vo: float) -> "SteadyStateModel":
        return replace(self, vo=vo)


@dataclass
class SteadyStateResult:
    model: SteadyStateModel
    omega: np.ndarray
    rho22: np.ndarray
    rho12_envelope: np.ndarray
    sz: np.ndarray

    @property
    def tau(self) -> float:
        return self.model.tau

    @property
    def linewidth(self) -> float:
        return self.model.linewidth

    @property
    def center(self) -> float:
        return self.model.shifted_eps21


def _apply_convention(value: complex, convention: SteadyStateConvention) -> complex:
    if convention is SteadyStateConvention.AS_PRINTED:
        return complex(value)
    return complex(value.real)


def build_model(
    lam: LambdaTensor,
    theta12: complex,
    theta21: complex,
    eps21: float,
    vo: float,
    convention: SteadyStateConvention = SteadyStateConvention.AS_PRINTED,
) -> SteadyStateModel:
    if lam.levels[:2] != (1, 2) or lam.size != 2:
        raise ConfigError(f"steady state requires the state set (1, 2), got {lam.levels}")
    if vo < 0:
        raise ConfigError(f"drive amplitude must be non-negative, got {vo}")

    lambda_12_12 = lam.value(1, 2, 1, 2)
    lambda_21_12 = lam.value(1, 2, 2, 1)
    if convention is SteadyStateConvention.MAGNITUDE:
        lambda_12_12 = complex(-abs(lambda_12_12))
        lambda_21_12 = complex(lambda_21_12.real)
    else:
        lambda_12_12 = _apply_convention(lambda_12_12, convention)
        lambda_21_12 = _apply_convention(lambda_21_12, convention)

    return SteadyStateModel(
        lambda_22_11=lam.value(1, 1, 2, 2).real,
        lambda_11_11=lam.value(1, 1, 1, 1).real,
        lambda_12_12=lambda_12_12,
        lambda_21_12=lambda_21_12,
        theta12=complex(theta12),
        theta21=complex(theta21),
        eps21=float(eps21),
        vo=float(vo),
        convention=convention,
    )


def steady_state(
    lam: LambdaTensor,
    theta12: complex,
    theta21: complex,
    eps21: float,
    vo: float,
    omega_grid: np.ndarray,
    convention: SteadyStateConvention = SteadyStateConvention.AS_PRINTED,
) -> SteadyStateResult:
    """Асимптотические ρ22(Ω), огибающая ρ12(Ω) и ⟨Sz⟩ на сетке Ω."""
    model = build_model(lam, theta12, theta21, eps21, vo, convention)
    omega = np.asarray(omega_grid, dtype=float)
    residue = float(np.max(np.abs(np.imag(model.rho22_complex(omega))), initial=0.0))
    if residue > IMAGINARY_RESIDUE_WARN:
        logger.warning(
            f"Steady-state rho22 has imaginary residue {residue:.3e} under the {convention.value} convention"
        )
    logger.debug(
        f"Steady state: tau={model.tau:.4g} ns, Delta21={model.linewidth:.4g}, "
        f"eps21~={model.shifted_eps21:.9f}"
    )
    return SteadyStateResult(
        model=model,
        omega=omega,
        rho22=model.rho22(omega),
        rho12_envelope=model.rho12_envelope(omega),
        sz=model.sz(omega),
    )


@dataclass(frozen=True)
class ConsistencyReport:
    rho22_residual: float
    rho12_envelope_mismatch: float
    samples: int
    expected_rho22: float
    expected_envelope: float

    def to_dict(self) -> Dict:
        return {
            "rho22_residual": self.rho22_residual,
            "rho12_envelope_mismatch": self.rho12_envelope_mismatch,
            "samples": self.samples,
            "expected_rho22": self.expected_rho22,
            "expected_envelope": self.expected_envelope,
        }


def consistency_check(
    trajectory: DensityTrajectory,
    model: SteadyStateModel,
    t_min: Optional[float] = None,
) -> ConsistencyReport:
    """Сравнить хвост траектории (t ≥ t_min, по умолчанию 3τ) с асимптотикой."""
    if trajectory.levels[:2] != (1, 2):
        raise ConfigError(f"trajectory levels {trajectory.levels} do not start with (1, 2)")
    tones = trajectory.drive.tones
    if len(tones) > 1:
        raise ConfigError("consistency check needs a single-tone drive")
    amplitude = tones[0].amplitude if tones else 0.0
    omega = tones[0].frequency if tones else model.shifted_eps21
    model = model.with_amplitude(amplitude)

    t_min = 3.0 * model.tau if t_min is None else t_min
    if trajectory.times[-1] < 3.0 * model.tau:
        logger.warning(
            f"Trajectory ends at {trajectory.times[-1]:.4g} ns, before 3*tau={3.0 * model.tau:.4g} ns"
        )
    mask = trajectory.times >= t_min
    if not np.any(mask):
        raise ConfigError(f"no samples after t_min={t_min:.4g} ns")

    expected_rho22 = float(model.rho22(omega))
    expected_env = float(abs(model.rho12_envelope(omega)))
    rho22 = trajectory.population(2)[mask]
    rho12 = np.abs(trajectory.coherence(1, 2)[mask])

    return ConsistencyReport(
        rho22_residual=float(np.mean(np.abs(rho22 - expected_rho22))),
        rho12_envelope_mismatch=float(np.mean(np.abs(rho12 - expected_env))),
        samples=int(mask.sum()),
        expected_rho22=expected_rho22,
        expected_envelope=expected_env,
    )
