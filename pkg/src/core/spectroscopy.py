"""
Численные эксперименты спектроскопии.

- run_two_state: развёртка частоты одной накачки по ℰ из двух уровней
- run_g_sweep: та же развёртка для набора связей g (второй порядок)
- run_ladder: двухтоновая накачка лестницы ℰ = {1, 2, 3}
"""

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple
import logging
import math
import time

import numpy as np
from scipy.optimize import curve_fit

from src.core.basis import AngularBasis, SpinOperators, build_basis, spin_matrices
from src.core.device import KHZ, CanonicalModes, DeviceParams, derive_modes
from src.core.errors import ConfigError, DivisionHazard, SimulationError
from src.core.hamiltonian import HamiltonianSet, build_hamiltonians
from src.core.integrator import (
    ToneBatch,
    check_step,
    default_step,
    rk4_propagate,
    step_count,
)
from src.core.lindblad import (
    DensityTrajectory,
    DriveTone,
    DriveWaveform,
    GammaTensor,
    LambdaTensor,
    build_gamma,
    build_generators,
    build_jumps,
    build_lambda,
    density_monitor,
    evolve,
    ground_density,
    max_phase_rate,
    qubit_expectation,
    spin_table,
)
from src.core.perturbation import EigenSystem, perturb, select_levels
from src.core.steadystate import SteadyStateResult, steady_state
from src.core.types import Experiment, SteadyStateConvention
from src.infrastructure import metrics
from src.infrastructure.orchestrator import SweepOrchestrator, split_chunks

logger = logging.getLogger(__name__)

# Сколько снимков проверять на физичность за один прогон чанка
MONITOR_SAMPLES = 100
# Доля хвоста траектории лестницы для усреднения населённостей
LADDER_TAIL_FRACTION = 0.1


# ═══════════════════════════════════════════════════════════════
# Модель устройства
# ═══════════════════════════════════════════════════════════════


@dataclass
class SystemModel:
    """Всё, что нужно экспериментам: моды, базис, H, собственные пары, γ."""

    params: DeviceParams
    modes: CanonicalModes
    basis: AngularBasis
    hamiltonians: HamiltonianSet
    eigsys: EigenSystem
    spin: SpinOperators
    gamma: GammaTensor

    def lambda_for(self, levels: Tuple[int, ...]) -> LambdaTensor:
        return build_lambda(self.gamma, build_jumps(self.eigsys, self.basis, levels))

    def theta_for(self, levels: Tuple[int, ...]) -> np.ndarray:
        idx = select_levels(self.eigsys, levels)
        return self.eigsys.matrix_elements(self.hamiltonians.theta)[np.ix_(idx, idx)]


def prepare_system(params: DeviceParams, order: int, s_max: float = 3.0) -> SystemModel:
    modes = derive_modes(params)
    basis = build_basis(s_max)
    hamiltonians = build_hamiltonians(params, modes, basis)
    eigsys = perturb(hamiltonians.h0, hamiltonians.dh, basis, order)
    return SystemModel(
        params=params,
        modes=modes,
        basis=basis,
        hamiltonians=hamiltonians,
        eigsys=eigsys,
        spin=spin_matrices(basis),
        gamma=build_gamma(params, modes),
    )


# ═══════════════════════════════════════════════════════════════
# План и результаты
# ═══════════════════════════════════════════════════════════════


@dataclass
class SweepPlan:
    """
    Параметры эксперимента. Время в нс, частоты в рад/нс, амплитуды в нВ.

    omega_grid, если задан, используется как есть; иначе строится
    n_points точек в ε21 ± span_linewidths·Δ21(Vo).
    """

    experiment: Experiment = Experiment.TWO_STATE_SWEEP
    levels: Tuple[int, ...] = (1, 2)
    order: int = 0
    amplitude: float = 1.0
    t_readout: float = 100_000.0
    n_points: int = 801
    span_linewidths: float = 20.0
    omega_grid: Optional[np.ndarray] = None
    g_list: Tuple[float, ...] = ()
    probe_amplitude: float = 0.5
    coupling_amplitude: float = 1.0
    detuning: float = 50 * KHZ
    t_end: float = 500_000.0
    dt: Optional[float] = None
    stride: int = 1000
    s_max: float = 3.0
    convention: SteadyStateConvention = SteadyStateConvention.AS_PRINTED

    def __post_init__(self):
        self.levels = tuple(int(k) for k in self.levels)
        self.g_list = tuple(float(g) for g in self.g_list)
        if self.order not in (0, 1, 2):
            raise ConfigError(f"order must be 0, 1 or 2, got {self.order}")
        if self.n_points < 1:
            raise ConfigError(f"n_points must be >= 1, got {self.n_points}")
        if self.span_linewidths <= 0:
            raise ConfigError("span_linewidths must be positive")
        if self.t_readout <= 0 or self.t_end <= 0:
            raise ConfigError("readout and end times must be positive")
        if min(self.amplitude, self.probe_amplitude, self.coupling_amplitude) < 0:
            raise ConfigError("drive amplitudes must be non-negative")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.stride < 1:
            raise ConfigError(f"stride must be >= 1, got {self.stride}")
        if self.experiment is Experiment.LADDER and self.levels != (1, 2, 3):
            raise ConfigError(f"ladder experiment uses levels (1, 2, 3), got {self.levels}")
        if self.experiment is not Experiment.LADDER and len(self.levels) != 2:
            raise ConfigError(f"frequency sweeps need exactly two levels, got {self.levels}")
        if self.experiment is Experiment.G_SWEEP and not self.g_list:
            raise ConfigError("g sweep needs a non-empty g list")
        if self.g_list and np.any(np.diff(self.g_list) <= 0):
            raise ConfigError("g list must be strictly increasing")
        if self.omega_grid is not None:
            self.omega_grid = np.asarray(self.omega_grid, dtype=float)
            if self.omega_grid.size == 0 or np.any(np.diff(self.omega_grid) <= 0):
                raise ConfigError("omega grid must be non-empty and strictly increasing")


@dataclass(frozen=True)
class SweepRecord:
    g: float
    omega: float
    spin: Tuple[float, float, float]
    populations: Tuple[float, ...]


@dataclass
class SweepResult:
    experiment: Experiment
    levels: Tuple[int, ...]
    records: List[SweepRecord]
    header: Dict = field(default_factory=dict)
    steady: List[SteadyStateResult] = field(default_factory=list)
    trajectory: Optional[DensityTrajectory] = None

    def columns(self) -> List[str]:
        return ["g", "omega", "Sx", "Sy", "Sz"] + [f"rho{k}{k}" for k in self.levels]

    def rows(self) -> List[List[float]]:
        return [[r.g, r.omega, *r.spin, *r.populations] for r in self.records]

    def lineshape(self, g: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
        """(Ω, ⟨Sz⟩) для заданного g (или для единственного)."""
        chosen = [r for r in self.records if g is None or r.g == g]
        return np.array([r.omega for r in chosen]), np.array([r.spin[2] for r in chosen])


# ═══════════════════════════════════════════════════════════════
# Интегрирование чанков
# ═══════════════════════════════════════════════════════════════


@dataclass
class IntegrationPayload:
    """Всё для одного процесса: генераторы, ρ(0) и тоны чанка."""

    l0: np.ndarray
    l1: np.ndarray
    rho0: np.ndarray
    tones: ToneBatch
    dt: float
    n_steps: int


def integrate_chunk(payload: IntegrationPayload) -> np.ndarray:
    """Финальные vec(ρ) формы (P, n²) для чанка точек."""
    n = payload.rho0.shape[0]
    y0 = np.tile(payload.rho0.reshape(1, -1), (payload.tones.points, 1))
    stride = max(1, payload.n_steps // MONITOR_SAMPLES)
    result = rk4_propagate(
        y0,
        payload.l0,
        payload.l1,
        payload.tones,
        payload.dt,
        payload.n_steps,
        stride=stride,
        monitor=density_monitor(n),
    )
    return result.final


def _pair_linewidth(lam: LambdaTensor, theta: np.ndarray, amplitude: float) -> float:
    lower, upper = lam.levels
    decay = lam.value(lower, upper, lower, upper)
    if decay.real >= 0:
        raise DivisionHazard(
            f"Lambda^({lower},{upper})_({lower},{upper}) = {decay.real:.3e} gives no finite coherence time"
        )
    tau = 1.0 / abs(decay)
    return math.sqrt(1.0 + 0.5 * abs(theta[0, 1]) ** 2 * amplitude**2 * tau**2) / tau


def frequency_grid(center: float, linewidth: float, plan: SweepPlan) -> np.ndarray:
    if plan.omega_grid is not None:
        grid = np.asarray(plan.omega_grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0):
            raise ConfigError("omega grid must be a non-empty list of positive frequencies")
        return grid
    half = plan.span_linewidths * linewidth
    if plan.n_points == 1:
        return np.array([center])
    return np.linspace(center - half, center + half, plan.n_points)


def run_two_state(
    params: DeviceParams,
    plan: SweepPlan,
    orchestrator: Optional[SweepOrchestrator] = None,
    system: Optional[SystemModel] = None,
) -> SweepResult:
    """⟨Sx,Sy,Sz⟩(t_readout) по сетке Ω при старте из основного состояния."""
    orchestrator = orchestrator or SweepOrchestrator()
    system = system or prepare_system(params, plan.order, plan.s_max)
    levels = plan.levels
    experiment = plan.experiment.value

    lam = system.lambda_for(levels)
    metrics.trace_leak.labels(experiment=experiment).set(lam.trace_leak())
    theta_e = system.theta_for(levels)
    energies = system.eigsys.energies[select_levels(system.eigsys, levels)]
    spin_e = spin_table(system.eigsys, system.spin, levels)
    transition = float(energies[1] - energies[0])

    linewidth = _pair_linewidth(lam, theta_e, plan.amplitude) if plan.omega_grid is None else float("nan")
    grid = frequency_grid(transition, linewidth, plan)

    rate = max_phase_rate(energies, float(grid.max()))
    dt = default_step(rate, plan.t_readout) if plan.dt is None else plan.dt
    check_step(dt, rate)
    n_steps = step_count(plan.t_readout, dt)
    dt = plan.t_readout / n_steps

    l0, l1 = build_generators(energies, theta_e, lam)
    rho0 = ground_density(len(levels))
    payloads = [
        IntegrationPayload(
            l0=l0,
            l1=l1,
            rho0=rho0,
            tones=ToneBatch(
                amplitudes=np.full((chunk.stop - chunk.start, 1), plan.amplitude),
                frequencies=grid[chunk][:, None],
            ),
            dt=dt,
            n_steps=n_steps,
        )
        for chunk in split_chunks(len(grid), orchestrator.jobs)
    ]

    logger.info(
        f"Two-state sweep levels={levels} g={params.g:.6g}: {len(grid)} points, "
        f"{n_steps} steps of {dt:.4g} ns"
    )
    started = time.perf_counter()
    finals = np.concatenate(orchestrator.run(integrate_chunk, payloads), axis=0)
    elapsed = time.perf_counter() - started
    metrics.trajectory_seconds.labels(experiment=experiment).observe(elapsed)
    metrics.rk4_steps_total.labels(experiment=experiment).inc(n_steps * len(payloads))
    metrics.sweep_points_total.labels(experiment=experiment).inc(len(grid))

    n = len(levels)
    rho = finals.reshape(-1, n, n)
    spins = qubit_expectation(spin_e, rho)
    records = [
        SweepRecord(
            g=params.g,
            omega=float(omega),
            spin=tuple(float(x) for x in spins[i]),
            populations=tuple(float(rho[i, k, k].real) for k in range(n)),
        )
        for i, omega in enumerate(grid)
    ]

    steady = []
    if levels == (1, 2):
        steady.append(
            steady_state(lam, theta_e[0, 1], theta_e[1, 0], transition, plan.amplitude, grid, plan.convention)
        )

    header = {
        "experiment": experiment,
        "order": plan.order,
        "levels": ",".join(str(k) for k in levels),
        "g": params.g,
        "V_nV": plan.amplitude,
        "t_readout_ns": plan.t_readout,
        "eps21": transition,
        "dt_ns": dt,
        "steps": n_steps,
        "trace_leak": lam.trace_leak(),
    }
    return SweepResult(experiment=plan.experiment, levels=levels, records=records, header=header, steady=steady)


def run_g_sweep(
    params: DeviceParams,
    plan: SweepPlan,
    orchestrator: Optional[SweepOrchestrator] = None,
) -> SweepResult:
    """Линии ⟨Sz⟩(Ω) для каждого g из плана, состояния второго порядка."""
    plan = replace(plan, order=2)
    records: List[SweepRecord] = []
    steady: List[SteadyStateResult] = []
    transitions = []
    for g in plan.g_list:
        result = run_two_state(params.with_coupling(g), plan, orchestrator)
        records.extend(result.records)
        steady.extend(result.steady)
        transitions.append(f"{result.header['eps21']:.12g}")
    header = {
        "experiment": plan.experiment.value,
        "order": 2,
        "levels": ",".join(str(k) for k in plan.levels),
        "g_list": ",".join(f"{g:.9g}" for g in plan.g_list),
        "eps21_list": ",".join(transitions),
        "V_nV": plan.amplitude,
        "t_readout_ns": plan.t_readout,
    }
    return SweepResult(
        experiment=plan.experiment, levels=plan.levels, records=records, header=header, steady=steady
    )


def run_ladder(
    params: DeviceParams,
    plan: SweepPlan,
    system: Optional[SystemModel] = None,
) -> SweepResult:
    """Пробная накачка на ε21 + det и связующая на ε32 + det."""
    system = system or prepare_system(params, plan.order, plan.s_max)
    levels = plan.levels
    lam = system.lambda_for(levels)
    metrics.trace_leak.labels(experiment=plan.experiment.value).set(lam.trace_leak())

    eps21 = system.eigsys.transition(2, 1)
    eps32 = system.eigsys.transition(3, 2)
    drive = DriveWaveform(
        tones=(
            DriveTone(amplitude=plan.probe_amplitude, frequency=eps21 + plan.detuning),
            DriveTone(amplitude=plan.coupling_amplitude, frequency=eps32 + plan.detuning),
        )
    )

    started = time.perf_counter()
    trajectory = evolve(
        system.eigsys,
        system.hamiltonians.theta,
        lam,
        drive,
        t_end=plan.t_end,
        dt=plan.dt,
        stride=plan.stride,
        spin=system.spin,
    )
    metrics.trajectory_seconds.labels(experiment=plan.experiment.value).observe(time.perf_counter() - started)
    metrics.rk4_steps_total.labels(experiment=plan.experiment.value).inc(trajectory.diagnostics["steps"])
    metrics.sweep_points_total.labels(experiment=plan.experiment.value).inc(1)

    tail = max(1, int(math.ceil(LADDER_TAIL_FRACTION * len(trajectory.times))))
    populations = tuple(float(trajectory.population(k)[-tail:].mean()) for k in levels)
    spin = tuple(float(x) for x in trajectory.observables[-tail:].mean(axis=0))
    record = SweepRecord(g=params.g, omega=eps21 + plan.detuning, spin=spin, populations=populations)
    logger.info(f"Ladder long-time populations: {', '.join(f'{p:.4f}' for p in populations)}")

    header = {
        "experiment": plan.experiment.value,
        "order": plan.order,
        "levels": "1,2,3",
        "g": params.g,
        "Vp_nV": plan.probe_amplitude,
        "Vc_nV": plan.coupling_amplitude,
        "detuning": plan.detuning,
        "eps21": eps21,
        "eps32": eps32,
        "t_end_ns": plan.t_end,
        "dt_ns": trajectory.diagnostics["dt"],
        "trace_leak": trajectory.diagnostics["trace_leak"],
    }
    return SweepResult(
        experiment=plan.experiment, levels=levels, records=[record], header=header, trajectory=trajectory
    )


# ═══════════════════════════════════════════════════════════════
# Аппроксимация линии
# ═══════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class LorentzianFit:
    center: float
    hwhm: float
    amplitude: float
    offset: float


def lorentzian(x, center, hwhm, amplitude, offset):
    return offset + amplitude * hwhm**2 / ((x - center) ** 2 + hwhm**2)


def fit_lorentzian(omega: np.ndarray, signal: np.ndarray) -> LorentzianFit:
    """Подогнать offset + A·w²/((Ω − c)² + w²) методом наименьших квадратов."""
    omega = np.asarray(omega, dtype=float)
    signal = np.asarray(signal, dtype=float)
    if omega.size < 4:
        raise ConfigError("need at least four points to fit a Lorentzian")

    offset0 = float(np.median(signal[[0, -1]]))
    peak = int(np.argmax(np.abs(signal - offset0)))
    amplitude0 = float(signal[peak] - offset0)
    above = np.abs(signal - offset0) >= 0.5 * abs(amplitude0)
    width0 = max(0.5 * float(np.ptp(omega[above])), float(np.min(np.diff(np.sort(omega)))))

    try:
        popt, _ = curve_fit(
            lorentzian,
            omega,
            signal,
            p0=[float(omega[peak]), width0, amplitude0, offset0],
            maxfev=20000,
        )
    except RuntimeError as e:
        raise SimulationError(f"Lorentzian fit did not converge: {e}") from e
    center, hwhm, amplitude, offset = (float(x) for x in popt)
    return LorentzianFit(center=center, hwhm=abs(hwhm), amplitude=amplitude, offset=offset)
