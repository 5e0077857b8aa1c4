"""
Диссипация и эволюция матрицы плотности в усечённом подпространстве ℰ.

Канонические каналы (σ, s): σ ∈ {↑, ↓}, s = + это уничтожение a_σ,
s = − это рождение a†_σ. Тензор γ(σ,s;σ′,s′) собирается из голых
скоростей резонатора (+) и трансмона (−); Λ это матрица Линдблада,
переписанная в собственном базисе и ограниченная на ℰ.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple
import cmath
import logging
import math

import numpy as np

from src.core.basis import AngularBasis, OperatorMatrix, SpinOperators, ladder_matrix
from src.core.device import CanonicalModes, DeviceParams
from src.core.errors import ConfigError, NonPhysicalState
from src.core.integrator import (
    RK4Result,
    ToneBatch,
    check_step,
    default_step,
    rk4_propagate,
    step_count,
)
from src.core.perturbation import EigenSystem, select_levels
from src.core.types import LadderKind, Mode
from src.infrastructure.diagnostics import FAIL_FACTOR, TRACE_BUDGET, check_density, full_density_check

logger = logging.getLogger(__name__)

CHANNELS: Tuple[Tuple[Mode, int], ...] = (
    (Mode.UP, 1),
    (Mode.UP, -1),
    (Mode.DOWN, 1),
    (Mode.DOWN, -1),
)

HERMITIAN_TOLERANCE = 1e-12
IMAGINARY_TOLERANCE = 1e-9
# Допустимая утечка следа Λ относительно max|Λ|
TRACE_LEAK_FRACTION = 1e-9


# ═══════════════════════════════════════════════════════════════
# Тензор скоростей γ(σ,s;σ′,s′)
# ═══════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class GammaTensor:
    """Эрмитова 4x4 матрица в порядке CHANNELS."""

    matrix: np.ndarray

    def value(self, mode: Mode, s: int, mode_p: Mode, s_p: int) -> complex:
        return complex(self.matrix[CHANNELS.index((mode, s)), CHANNELS.index((mode_p, s_p))])


def _gamma_element(params: DeviceParams, modes: CanonicalModes, a: Tuple[Mode, int], b: Tuple[Mode, int]) -> complex:
    (mode, s), (mode_p, s_p) = a, b
    sigma, sigma_p = mode.sign, mode_p.sign
    w_sigma, w_sigma_p = modes.frequency(mode), modes.frequency(mode_p)
    total = 0j
    for mu in (1, -1):
        w_mu = modes.bare_frequency(mu)
        xi_product = modes.mixing(mode, mu) * modes.mixing(mode_p, mu)
        if xi_product == 0.0:
            continue
        for m in (1, -1):
            rate = params.rates.bare(mu, m)
            if rate == 0.0:
                continue
            weight = ((w_mu + m * s * w_sigma) / w_sigma) * ((w_mu + m * s_p * w_sigma_p) / w_sigma_p)
            phase = math.pi * ((sigma - sigma_p) * m * (1 - mu) - s * (1 - sigma) + s_p * (1 - sigma_p)) / 4.0
            total += 0.25 * rate * xi_product * weight * cmath.exp(1j * phase)
    return total


def build_gamma(params: DeviceParams, modes: CanonicalModes) -> GammaTensor:
    """γ(σ,s;σ′,s′) из γ′± и γ± через ξ(σ, μ)."""
    matrix = np.array([[_gamma_element(params, modes, a, b) for b in CHANNELS] for a in CHANNELS])
    error = float(np.max(np.abs(matrix - matrix.conj().T)))
    scale = max(float(np.max(np.abs(matrix))), 1e-300)
    if error > HERMITIAN_TOLERANCE * scale:
        raise NonPhysicalState(f"gamma tensor is not Hermitian: relative error {error / scale:.3e}")
    return GammaTensor(matrix=0.5 * (matrix + matrix.conj().T))


# ═══════════════════════════════════════════════════════════════
# Операторы скачков и тензор Λ
# ═══════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class JumpSet:
    """Матрицы ⟨ψk|A_{σs}|ψk′⟩ для k, k′ ∈ ℰ; operators[c] в порядке CHANNELS."""

    levels: Tuple[int, ...]
    operators: np.ndarray

    @property
    def size(self) -> int:
        return len(self.levels)


def build_jumps(eigsys: EigenSystem, basis: AngularBasis, state_set: Sequence[int]) -> JumpSet:
    """Лестничные операторы в буфере → физический блок → собственный базис ℰ."""
    idx = select_levels(eigsys, state_set)
    operators = []
    for mode, s in CHANNELS:
        kind = LadderKind.ANNIHILATE if s > 0 else LadderKind.CREATE
        op = ladder_matrix(basis, mode, kind).project(basis)
        operators.append(eigsys.matrix_elements(op)[np.ix_(idx, idx)])
    return JumpSet(levels=tuple(state_set), operators=np.array(operators))


@dataclass(frozen=True)
class LambdaTensor:
    """
    Λ^{(l,l′)}_{k,k′} с осями [k, k′, l, l′] (позиции внутри ℰ).

    dρ_{kk′}/dt ⊃ Σ_{l,l′} Λ^{(l,l′)}_{k,k′}·ρ_{ll′}.
    """

    levels: Tuple[int, ...]
    tensor: np.ndarray

    @property
    def size(self) -> int:
        return len(self.levels)

    def value(self, k: int, k_p: int, l: int, l_p: int) -> complex:
        """Λ^{(l,l′)}_{k,k′} по номерам уровней (1-нумерация), все из ℰ."""
        pos = {level: i for i, level in enumerate(self.levels)}
        try:
            return complex(self.tensor[pos[k], pos[k_p], pos[l], pos[l_p]])
        except KeyError as e:
            raise ConfigError(f"level {e.args[0]} is not in the state set {self.levels}") from None

    def superoperator(self) -> np.ndarray:
        """Матрица n²×n² для vec(ρ) с индексом k·n + k′."""
        n = self.size
        return self.tensor.reshape(n * n, n * n)

    def trace_leak(self) -> float:
        """max_{l,l′} |Σ_k Λ^{(l,l′)}_{k,k}|."""
        leak = np.einsum("kkab->ab", self.tensor)
        return float(np.max(np.abs(leak), initial=0.0))


def build_lambda(gamma: GammaTensor, jumps: JumpSet) -> LambdaTensor:
    """Λ = ½ Σ γ_ab [2 A_a[k,l] A_b*[k′,l′] − δ_{k′l′} B[k,l] − δ_{kl} B[l′,k′]], B = Σ γ_ab A_b†A_a."""
    a = jumps.operators
    g = gamma.matrix
    n = jumps.size
    eye = np.eye(n)

    gain = 2.0 * np.einsum("ab,akl,bmn->kmln", g, a, a.conj())
    b = np.einsum("ab,bjk,ajl->kl", g, a.conj(), a)
    left = np.einsum("mn,kl->kmln", eye, b)
    right = np.einsum("kl,nm->kmln", eye, b)
    tensor = 0.5 * (gain - left - right)

    lam = LambdaTensor(levels=jumps.levels, tensor=tensor)
    leak = lam.trace_leak()
    scale = float(np.max(np.abs(tensor), initial=0.0))
    if leak > TRACE_LEAK_FRACTION * scale:
        logger.warning(f"Lambda for levels {jumps.levels} leaks trace: {leak:.3e} (scale {scale:.3e})")
    else:
        logger.debug(f"Lambda built for levels {jumps.levels}: trace leak {leak:.3e}")
    return lam


def apply_dissipator(gamma: GammaTensor, jumps: JumpSet, rho: np.ndarray) -> np.ndarray:
    """Прямое ½ Σ γ_ab (2 A_a ρ A_b† − A_b†A_a ρ − ρ A_b†A_a) на ℰ."""
    out = np.zeros_like(rho, dtype=complex)
    for i, a_op in enumerate(jumps.operators):
        for j, b_op in enumerate(jumps.operators):
            rate = gamma.matrix[i, j]
            if rate == 0:
                continue
            b_dag = b_op.conj().T
            out += 0.5 * rate * (2.0 * a_op @ rho @ b_dag - b_dag @ a_op @ rho - rho @ b_dag @ a_op)
    return out


# ═══════════════════════════════════════════════════════════════
# Накачка
# ═══════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class DriveTone:
    amplitude: float
    frequency: float

    def __post_init__(self):
        if self.amplitude < 0 or not math.isfinite(self.amplitude):
            raise ConfigError(f"tone amplitude must be non-negative, got {self.amplitude}")
        if self.frequency <= 0 or not math.isfinite(self.frequency):
            raise ConfigError(f"tone frequency must be positive, got {self.frequency}")


@dataclass(frozen=True)
class DriveWaveform:
    """V(t) = Σ_i V_i·sin(Ω_i·t)."""

    tones: Tuple[DriveTone, ...] = ()

    def value(self, t: float) -> float:
        return float(sum(tone.amplitude * math.sin(tone.frequency * t) for tone in self.tones))

    @property
    def max_frequency(self) -> float:
        return max((tone.frequency for tone in self.tones), default=0.0)

    def batch(self) -> ToneBatch:
        if not self.tones:
            return ToneBatch(np.zeros((1, 1)), np.ones((1, 1)))
        return ToneBatch(
            amplitudes=np.array([[tone.amplitude for tone in self.tones]]),
            frequencies=np.array([[tone.frequency for tone in self.tones]]),
        )


# ═══════════════════════════════════════════════════════════════
# Эволюция
# ═══════════════════════════════════════════════════════════════


def build_generators(energies: np.ndarray, theta: np.ndarray, lam: LambdaTensor) -> Tuple[np.ndarray, np.ndarray]:
    """L0 = −i(εk − εk′) + Λ и L1 = i(Θ⊗1 − 1⊗Θᵀ) для vec(ρ)."""
    n = len(energies)
    eye = np.eye(n)
    detuning = (energies[:, None] - energies[None, :]).reshape(-1)
    l0 = np.diag(-1j * detuning) + lam.superoperator()
    l1 = 1j * (np.kron(theta, eye) - np.kron(eye, theta.T))
    return l0, l1


def max_phase_rate(energies: np.ndarray, drive_frequency: float) -> float:
    spread = float(np.max(energies) - np.min(energies)) if len(energies) else 0.0
    return spread + drive_frequency


def ground_density(n: int) -> np.ndarray:
    rho = np.zeros((n, n), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def density_monitor(n: int, reference_trace: float = 1.0):
    """Колбэк для rk4_propagate: NonPhysicalState при выходе за FAIL_FACTOR·бюджет."""

    def monitor(step: int, t: float, y: np.ndarray) -> None:
        for point, vec in enumerate(y):
            report = check_density(vec.reshape(n, n), reference_trace)
            if report["status"] != "healthy":
                raise NonPhysicalState(
                    f"t={t:.4g} ns (step {step}, point {point}): " + "; ".join(report["violations"])
                )

    return monitor


@dataclass
class DensityTrajectory:
    """Записанная траектория ρ(t) на ℰ и наблюдаемые ⟨Sx,Sy,Sz⟩."""

    times: np.ndarray
    rho: np.ndarray
    levels: Tuple[int, ...]
    drive: DriveWaveform
    energies: np.ndarray
    observables: Optional[np.ndarray] = None
    diagnostics: Dict = field(default_factory=dict)

    def population(self, level: int) -> np.ndarray:
        pos = self.levels.index(level)
        return np.real(self.rho[:, pos, pos])

    def coherence(self, level: int, level_p: int) -> np.ndarray:
        return self.rho[:, self.levels.index(level), self.levels.index(level_p)]

    def rows(self) -> List[List[float]]:
        """Строки для экспорта: t, ρ_kk, Re/Im ρ_k<k′, затем ⟨S⟩."""
        n = len(self.levels)
        upper = [(i, j) for i in range(n) for j in range(i + 1, n)]
        out = []
        for step, t in enumerate(self.times):
            rho = self.rho[step]
            row = [float(t) * 1e-3] + [float(rho[i, i].real) for i in range(n)]
            for i, j in upper:
                row += [float(rho[i, j].real), float(rho[i, j].imag)]
            if self.observables is not None:
                row += [float(x) for x in self.observables[step]]
            out.append(row)
        return out

    def columns(self) -> List[str]:
        n = len(self.levels)
        names = ["t_us"] + [f"rho{k}{k}" for k in self.levels]
        for i in range(n):
            for j in range(i + 1, n):
                a, b = self.levels[i], self.levels[j]
                names += [f"re_rho{a}{b}", f"im_rho{a}{b}"]
        if self.observables is not None:
            names += ["Sx", "Sy", "Sz"]
        return names


def spin_table(eigsys: EigenSystem, spin: SpinOperators, levels: Sequence[int]) -> np.ndarray:
    """S^(α)_{kk′} = ⟨ψk|S_α|ψk′⟩ на ℰ, форма (3, n, n)."""
    idx = select_levels(eigsys, levels)
    basis = eigsys.basis
    return np.array(
        [eigsys.matrix_elements(op.project(basis))[np.ix_(idx, idx)] for op in spin.cartesian()]
    )


def qubit_expectation(spin_e: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """⟨S_α⟩ = Tr(S_α ρ); мнимый остаток > 1e-9 считается нефизичным."""
    values = np.einsum("akl,...lk->...a", spin_e, rho)
    residue = float(np.max(np.abs(values.imag), initial=0.0))
    if residue > IMAGINARY_TOLERANCE:
        raise NonPhysicalState(f"spin expectation has imaginary residue {residue:.3e}")
    return values.real


def evolve(
    eigsys: EigenSystem,
    theta: OperatorMatrix,
    lam: LambdaTensor,
    drive: DriveWaveform,
    t_end: float,
    rho0: Optional[np.ndarray] = None,
    dt: Optional[float] = None,
    stride: int = 1,
    spin: Optional[SpinOperators] = None,
) -> DensityTrajectory:
    """Проинтегрировать уравнение для ρ_{kk′} на ℰ классическим RK4."""
    levels = lam.levels
    idx = select_levels(eigsys, levels)
    n = len(idx)
    energies = eigsys.energies[idx]
    theta_e = eigsys.matrix_elements(theta)[np.ix_(idx, idx)]

    rho0 = ground_density(n) if rho0 is None else np.asarray(rho0, dtype=complex)
    if rho0.shape != (n, n):
        raise ConfigError(f"rho0 must be {n}x{n}, got {rho0.shape}")
    initial = check_density(rho0, fail_factor=1.0)
    if initial["status"] != "healthy":
        raise ConfigError("rho0 is not a density matrix: " + "; ".join(initial["violations"]))

    rate = max_phase_rate(energies, drive.max_frequency)
    dt = default_step(rate, t_end) if dt is None else dt
    if t_end > 0:
        check_step(dt, rate)
    n_steps = step_count(t_end, dt)
    if n_steps:
        dt = t_end / n_steps

    l0, l1 = build_generators(energies, theta_e, lam)
    reference = float(np.trace(rho0).real)
    result: RK4Result = rk4_propagate(
        rho0.reshape(1, n * n),
        l0,
        l1,
        drive.batch(),
        dt,
        n_steps,
        stride=stride,
        monitor=density_monitor(n, reference),
    )
    rho = result.samples[:, 0, :].reshape(-1, n, n)

    observables = None
    if spin is not None:
        observables = qubit_expectation(spin_table(eigsys, spin, levels), rho)

    diagnostics = full_density_check(rho, reference)
    diagnostics["trace_leak"] = lam.trace_leak()
    diagnostics["dt"] = dt
    diagnostics["steps"] = n_steps
    logger.info(
        f"Evolved levels {levels} to t={t_end:.4g} ns in {n_steps} steps "
        f"(max trace drift {diagnostics.get('max_trace_drift', 0.0):.2e})"
    )
    if diagnostics.get("max_trace_drift", 0.0) > FAIL_FACTOR * TRACE_BUDGET:
        raise NonPhysicalState(f"trace drift {diagnostics['max_trace_drift']:.3e}")

    return DensityTrajectory(
        times=result.times,
        rho=rho,
        levels=tuple(levels),
        drive=drive,
        energies=energies,
        observables=observables,
        diagnostics=diagnostics,
    )
