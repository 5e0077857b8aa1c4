"""
Угловой базис |S, mS⟩ двух канонических лестниц (представление Швингера).

n↑ = S + mS, n↓ = S − mS. Базис содержит буфер sMax + 2: произведения
лестничных операторов считаются в буфере и проецируются на физический блок
S ≤ sMax, поэтому усечение не портит элементы физического блока.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Tuple
import logging

import numpy as np

from src.core.errors import ConfigError
from src.core.types import LadderKind, Mode

logger = logging.getLogger(__name__)

DEFAULT_BUFFER = 2


def _half(value: int) -> str:
    frac = Fraction(value, 2)
    return str(frac.numerator) if frac.denominator == 1 else f"{frac.numerator}/{frac.denominator}"


@dataclass(frozen=True, order=True)
class AngularIndex:
    """Пара (S, mS), хранимая через удвоенные целые для точной арифметики."""

    two_s: int
    two_m: int

    def __post_init__(self):
        if self.two_s < 0 or abs(self.two_m) > self.two_s or (self.two_s - self.two_m) % 2:
            raise ConfigError(f"invalid angular index 2S={self.two_s}, 2mS={self.two_m}")

    @classmethod
    def from_occupations(cls, n_up: int, n_down: int) -> "AngularIndex":
        return cls(two_s=n_up + n_down, two_m=n_up - n_down)

    @classmethod
    def from_spin(cls, s: float, m: float) -> "AngularIndex":
        two_s, two_m = 2 * s, 2 * m
        if two_s != int(two_s) or two_m != int(two_m):
            raise ConfigError(f"S={s}, mS={m} must be half-integers")
        return cls(two_s=int(two_s), two_m=int(two_m))

    @property
    def s(self) -> float:
        return self.two_s / 2

    @property
    def m(self) -> float:
        return self.two_m / 2

    @property
    def n_up(self) -> int:
        return (self.two_s + self.two_m) // 2

    @property
    def n_down(self) -> int:
        return (self.two_s - self.two_m) // 2

    @property
    def n_total(self) -> int:
        return self.two_s

    @property
    def parity(self) -> int:
        """Чётность полного числа квантов (0 для целого S)."""
        return self.two_s % 2

    def occupation(self, mode: Mode) -> int:
        return self.n_up if mode is Mode.UP else self.n_down

    @property
    def label(self) -> str:
        return f"|{_half(self.two_s)},{_half(self.two_m)}⟩"

    def __str__(self) -> str:
        return self.label


class AngularBasis:
    """Упорядоченный базис (S по возрастанию, затем mS по возрастанию)."""

    def __init__(self, s_max: float, buffer: int = DEFAULT_BUFFER):
        two_s_max = 2 * s_max
        if s_max < 0 or two_s_max != int(two_s_max):
            raise ConfigError(f"s_max must be a non-negative half-integer, got {s_max}")
        if buffer < 0:
            raise ConfigError(f"buffer must be non-negative, got {buffer}")

        self.s_max = s_max
        self.buffer = buffer
        self.max_quanta = int(two_s_max) + 2 * buffer

        self.states: Tuple[AngularIndex, ...] = tuple(
            AngularIndex(two_s=two_s, two_m=two_m)
            for two_s in range(self.max_quanta + 1)
            for two_m in range(-two_s, two_s + 1, 2)
        )
        self._index: Dict[AngularIndex, int] = {state: i for i, state in enumerate(self.states)}
        self.physical_dim = sum(1 for st in self.states if st.two_s <= two_s_max)

        self.n_up = np.array([st.n_up for st in self.states])
        self.n_down = np.array([st.n_down for st in self.states])
        self.parity = np.array([st.parity for st in self.states])

        logger.debug(
            f"Angular basis: s_max={s_max}, buffered dim={self.dim}, physical dim={self.physical_dim}"
        )

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def physical_states(self) -> Tuple[AngularIndex, ...]:
        return self.states[: self.physical_dim]

    def index_of(self, state: AngularIndex) -> int:
        try:
            return self._index[state]
        except KeyError:
            raise ConfigError(f"{state.label} is outside the basis (s_max={self.s_max})") from None

    def index_of_spin(self, s: float, m: float) -> int:
        return self.index_of(AngularIndex.from_spin(s, m))

    def blocks(self) -> Iterator[Tuple[float, int, int]]:
        """(S, start, stop) для физических блоков фиксированного S."""
        start = 0
        for two_s in range(int(2 * self.s_max) + 1):
            stop = start + two_s + 1
            yield two_s / 2, start, stop
            start = stop

    def occupations(self, mode: Mode) -> np.ndarray:
        return self.n_up if mode is Mode.UP else self.n_down

    def __repr__(self) -> str:
        return f"AngularBasis(s_max={self.s_max}, dim={self.dim}, physical_dim={self.physical_dim})"


def build_basis(s_max: float, buffer: int = DEFAULT_BUFFER) -> AngularBasis:
    return AngularBasis(s_max=s_max, buffer=buffer)


# ═══════════════════════════════════════════════════════════════
# Матрицы операторов
# ═══════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class OperatorMatrix:
    """Плотная комплексная матрица в угловом базисе (буферном или физическом)."""

    entries: np.ndarray
    physical: bool = False

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(self.entries.conj().T, self.physical)

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check_compatible(other)
        return OperatorMatrix(self.entries + other.entries, self.physical)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check_compatible(other)
        return OperatorMatrix(self.entries - other.entries, self.physical)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check_compatible(other)
        return OperatorMatrix(self.entries @ other.entries, self.physical)

    def __mul__(self, scalar: complex) -> "OperatorMatrix":
        return OperatorMatrix(self.entries * scalar, self.physical)

    __rmul__ = __mul__

    def project(self, basis: AngularBasis) -> "OperatorMatrix":
        """Срезать буферную матрицу до физического блока."""
        if self.physical:
            return self
        n = basis.physical_dim
        return OperatorMatrix(self.entries[:n, :n].copy(), physical=True)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0))

    def _check_compatible(self, other: "OperatorMatrix") -> None:
        if self.entries.shape != other.entries.shape:
            raise ValueError(f"shape mismatch {self.entries.shape} vs {other.entries.shape}")


def ladder_matrix(basis: AngularBasis, mode: Mode, kind: LadderKind) -> OperatorMatrix:
    """a_σ или a†_σ на буферном базисе; рождение за границу буфера отбрасывается."""
    entries = np.zeros((basis.dim, basis.dim), dtype=complex)
    for j, state in enumerate(basis.states):
        n = state.occupation(mode)
        delta = 1 if kind is LadderKind.CREATE else -1
        n_new = n + delta
        if n_new < 0 or state.n_total + delta > basis.max_quanta:
            continue
        if mode is Mode.UP:
            target = AngularIndex.from_occupations(n_new, state.n_down)
        else:
            target = AngularIndex.from_occupations(state.n_up, n_new)
        entries[basis.index_of(target), j] = np.sqrt(max(n, n_new))
    return OperatorMatrix(entries)


@dataclass(frozen=True)
class SpinOperators:
    """Операторы Швингера: Sx, Sy, Sz, S±, N на буферном базисе."""

    sx: OperatorMatrix
    sy: OperatorMatrix
    sz: OperatorMatrix
    s_plus: OperatorMatrix
    s_minus: OperatorMatrix
    n_total: OperatorMatrix

    def cartesian(self) -> List[OperatorMatrix]:
        return [self.sx, self.sy, self.sz]

    def project(self, basis: AngularBasis) -> "SpinOperators":
        return SpinOperators(
            sx=self.sx.project(basis),
            sy=self.sy.project(basis),
            sz=self.sz.project(basis),
            s_plus=self.s_plus.project(basis),
            s_minus=self.s_minus.project(basis),
            n_total=self.n_total.project(basis),
        )


def spin_matrices(basis: AngularBasis) -> SpinOperators:
    """S+ = a†↑a↓, S− = a†↓a↑, Sz = (n↑ − n↓)/2, N = n↑ + n↓."""
    a_up = ladder_matrix(basis, Mode.UP, LadderKind.ANNIHILATE)
    a_down = ladder_matrix(basis, Mode.DOWN, LadderKind.ANNIHILATE)
    s_plus = a_up.dagger() @ a_down
    s_minus = a_down.dagger() @ a_up
    sz = OperatorMatrix(np.diag(0.5 * (basis.n_up - basis.n_down)).astype(complex))
    n_total = OperatorMatrix(np.diag(basis.n_up + basis.n_down).astype(complex))
    sx = (s_plus + s_minus) * 0.5
    sy = (s_plus - s_minus) * (-0.5j)
    return SpinOperators(sx=sx, sy=sy, sz=sz, s_plus=s_plus, s_minus=s_minus, n_total=n_total)


def export_operator(op: OperatorMatrix, tolerance: float = 0.0) -> List[str]:
    """Колоночный текст: row, col, re, im для элементов с |x| > tolerance."""
    lines = ["row\tcol\tre\tim"]
    rows, cols = np.nonzero(np.abs(op.entries) > tolerance)
    for r, c in zip(rows, cols):
        value = op.entries[r, c]
        lines.append(f"{r}\t{c}\t{value.real:.15g}\t{value.imag:.15g}")
    return lines
