"""
RK4 для линейных систем dy/dt = (L0 + V(t)·L1)·y.

Состояние батчировано по точкам развёртки: y имеет форму (P, d), у каждой
точки свой набор тонов V_p(t) = Σ_i A_{p,i}·sin(Ω_{p,i}·t).
"""

from dataclasses import dataclass
from typing import Callable, Optional
import logging
import math

import numpy as np

from src.core.errors import ConfigError, StepSizeTooLarge

logger = logging.getLogger(__name__)

# dt ≤ 2π / (POINTS_PER_PERIOD · max фазовой скорости)
POINTS_PER_PERIOD = 20
# Шаг по умолчанию в DEFAULT_REFINEMENT раз мельче предельного
DEFAULT_REFINEMENT = 2
# Сколько шагов за раз вычислять V(t) векторно
DRIVE_CHUNK = 2048

Monitor = Callable[[int, float, np.ndarray], None]


@dataclass(frozen=True)
class ToneBatch:
    """Амплитуды (нВ) и частоты (рад/нс) формы (P, n_tones)."""

    amplitudes: np.ndarray
    frequencies: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != self.frequencies.shape or self.amplitudes.ndim != 2:
            raise ConfigError(
                f"tone arrays must share a (points, tones) shape, got "
                f"{self.amplitudes.shape} and {self.frequencies.shape}"
            )

    @property
    def points(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def max_frequency(self) -> float:
        return float(np.max(self.frequencies, initial=0.0))

    def evaluate(self, times: np.ndarray) -> np.ndarray:
        """V(t) формы (len(times), P)."""
        phases = times[:, None, None] * self.frequencies[None, :, :]
        return np.sum(self.amplitudes[None, :, :] * np.sin(phases), axis=-1)


@dataclass
class RK4Result:
    """Моменты записи и снимки y формы (K, P, d)."""

    times: np.ndarray
    samples: np.ndarray
    steps: int
    dt: float

    @property
    def final(self) -> np.ndarray:
        return self.samples[-1]


def max_step(max_rate: float) -> float:
    """Предельный dt для данной максимальной фазовой скорости (рад/нс)."""
    if max_rate <= 0:
        return math.inf
    return 2.0 * math.pi / (POINTS_PER_PERIOD * max_rate)


def default_step(max_rate: float, t_end: float) -> float:
    limit = max_step(max_rate)
    if math.isinf(limit):
        return t_end
    return limit / DEFAULT_REFINEMENT


def check_step(dt: float, max_rate: float) -> None:
    if dt <= 0 or not math.isfinite(dt):
        raise ConfigError(f"dt must be positive, got {dt}")
    limit = max_step(max_rate)
    if dt > limit:
        raise StepSizeTooLarge(
            f"dt={dt:.4g} ns exceeds 2*pi/({POINTS_PER_PERIOD}*{max_rate:.4g})={limit:.4g} ns"
        )


def step_count(t_end: float, dt: float) -> int:
    """Число шагов, покрывающих [0, t_end]; dt затем подгоняется к t_end/n."""
    if t_end < 0:
        raise ConfigError(f"t_end must be non-negative, got {t_end}")
    return max(1, math.ceil(t_end / dt - 1e-9)) if t_end > 0 else 0


def rk4_propagate(
    y0: np.ndarray,
    l0: np.ndarray,
    l1: np.ndarray,
    tones: ToneBatch,
    dt: float,
    n_steps: int,
    stride: Optional[int] = None,
    monitor: Optional[Monitor] = None,
) -> RK4Result:
    """
    Классический RK4 с фиксированным шагом.

    stride задаёт период записи снимков (None означает только начало и конец).
    monitor(step, t, y) вызывается в каждой точке записи.
    """
    y = np.array(y0, dtype=complex, copy=True)
    if y.ndim != 2 or y.shape[0] != tones.points:
        raise ConfigError(f"y0 shape {y.shape} does not match {tones.points} sweep points")
    d = y.shape[1]
    if l0.shape != (d, d) or l1.shape != (d, d):
        raise ConfigError(f"generators must be {d}x{d}")

    stride = n_steps if stride is None or stride <= 0 else stride
    stride = max(stride, 1)

    # одна матрица для обоих генераторов: y @ [L0ᵀ | L1ᵀ]
    stacked = np.concatenate([l0.T, l1.T], axis=1)

    def rhs(state: np.ndarray, drive: np.ndarray) -> np.ndarray:
        z = state @ stacked
        return z[:, :d] + drive[:, None] * z[:, d:]

    times = [0.0]
    samples = [y.copy()]
    if monitor is not None:
        monitor(0, 0.0, y)

    half = 0.5 * dt
    step = 0
    while step < n_steps:
        chunk = min(DRIVE_CHUNK, n_steps - step)
        t_start = (step + np.arange(chunk)) * dt
        v_start = tones.evaluate(t_start)
        v_mid = tones.evaluate(t_start + half)
        v_end = tones.evaluate(t_start + dt)

        for i in range(chunk):
            k1 = rhs(y, v_start[i])
            k2 = rhs(y + half * k1, v_mid[i])
            k3 = rhs(y + half * k2, v_mid[i])
            k4 = rhs(y + dt * k3, v_end[i])
            y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

            step += 1
            if step % stride == 0 or step == n_steps:
                t = step * dt
                times.append(t)
                samples.append(y.copy())
                if monitor is not None:
                    monitor(step, t, y)

    logger.debug(f"RK4 finished: {n_steps} steps, dt={dt:.4g} ns, points={tones.points}")
    return RK4Result(times=np.array(times), samples=np.array(samples), steps=n_steps, dt=dt)
