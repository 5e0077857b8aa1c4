"""
Теория возмущений Рэлея–Шрёдингера до второго порядка по dH.

Связи, равные нулю точно (правило отбора по чётности N), пропускаются:
почти вырожденные пары разной чётности (например |1/2,+1/2⟩ и |1,−1⟩)
не дают ложной DegeneracyError.

Второй порядок считается на проецированном физическом блоке: уровням с
S > s_max − 2 недостают промежуточных состояний S+1, S+2, см. complete_spin.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np

from src.core.basis import AngularBasis, AngularIndex, OperatorMatrix
from src.core.device import DeviceParams, derive_modes
from src.core.errors import ConfigError, DegeneracyError
from src.core.hamiltonian import build_linear, build_quartic, exact_levels

logger = logging.getLogger(__name__)

DEGENERACY_FRACTION = 1e-6
# dH = −(E_C/12)·M⁴ меняет N не более чем на 4, то есть S не более чем на 2
QUARTIC_SPIN_REACH = 2.0


@dataclass(frozen=True)
class EigenSystem:
    """
    Собственные пары в порядке возрастания энергии.

    vectors[:, k] это ψk в физическом базисе; labels[k] это базисное
    состояние с максимальным перекрытием.
    """

    energies: np.ndarray
    vectors: np.ndarray
    labels: Tuple[AngularIndex, ...]
    order: int
    basis: AngularBasis

    @property
    def size(self) -> int:
        return len(self.energies)

    def matrix_elements(self, op: OperatorMatrix) -> np.ndarray:
        """⟨ψk|O|ψk′⟩ для физического оператора O."""
        return self.vectors.conj().T @ op.entries @ self.vectors

    def transition(self, upper: int, lower: int) -> float:
        """ε_{upper,lower} по 1-нумерации уровней."""
        return float(self.energies[upper - 1] - self.energies[lower - 1])

    def label_of(self, level: int) -> AngularIndex:
        return self.labels[level - 1]

    def level_of(self, state: AngularIndex) -> int:
        return self.labels.index(state) + 1


def _degeneracy_tolerance(diag: np.ndarray, basis: AngularBasis) -> float:
    if basis.physical_dim < 2:
        return 0.0
    omega_down = diag[basis.index_of_spin(0.5, -0.5)] - diag[basis.index_of_spin(0, 0)]
    return DEGENERACY_FRACTION * abs(omega_down)


def _check_gaps(numerators: np.ndarray, gaps: np.ndarray, tol: float, basis: AngularBasis, stage: str):
    hazard = (numerators != 0) & (np.abs(gaps) < tol)
    np.fill_diagonal(hazard, False)
    if np.any(hazard):
        j, k = np.argwhere(hazard)[0]
        states = basis.physical_states
        raise DegeneracyError(
            f"{stage}: {states[k].label} couples to {states[j].label} across gap "
            f"{gaps[j, k]:.3e} below tolerance {tol:.3e}"
        )


def _gauge_fix(vectors: np.ndarray) -> np.ndarray:
    dominant = np.argmax(np.abs(vectors), axis=0)
    phases = vectors[dominant, np.arange(vectors.shape[1])]
    return vectors * (np.abs(phases) / phases)[None, :]


def complete_spin(s_max: float) -> float:
    """Наибольший S, для которого все промежуточные состояния второго порядка лежат в базисе."""
    return s_max - QUARTIC_SPIN_REACH


def perturb(
    h0: OperatorMatrix,
    dh: OperatorMatrix,
    basis: AngularBasis,
    order: int,
) -> EigenSystem:
    """Энергии и состояния порядка 0, 1 или 2 на физическом блоке."""
    if order not in (0, 1, 2):
        raise ConfigError(f"order must be 0, 1 or 2, got {order}")

    xi = np.real(np.diag(h0.entries)).copy()
    v = dh.entries
    n = len(xi)
    identity = np.eye(n, dtype=complex)

    energies = xi.copy()
    vectors = identity.copy()

    if order >= 1:
        tol = _degeneracy_tolerance(xi, basis)
        # gaps[j, k] = ξk − ξj
        gaps = xi[None, :] - xi[:, None]
        off_diag = ~np.eye(n, dtype=bool)
        coupled = (v != 0) & off_diag
        _check_gaps(v, gaps, tol, basis, "first order")
        safe_gaps = np.where(coupled, gaps, 1.0)
        c1 = np.where(coupled, v / safe_gaps, 0.0)

        energies = energies + np.real(np.diag(v))
        vectors = vectors + c1

        if order == 2:
            energies = energies + np.real(np.einsum("kj,jk->k", v, c1))

            numer = v @ c1 - c1 * np.diag(v)[None, :]
            numer = np.where(off_diag, numer, 0.0)
            _check_gaps(numer, gaps, tol, basis, "second order")
            c2 = np.where(numer != 0, numer / np.where(numer != 0, gaps, 1.0), 0.0)
            c2 = c2 - np.diag(0.5 * np.sum(np.abs(c1) ** 2, axis=0))
            vectors = vectors + c2

        vectors = vectors / np.linalg.norm(vectors, axis=0)[None, :]
        vectors = _gauge_fix(vectors)

    states = basis.physical_states
    # argmax берёт первый максимум: при равенстве выигрывает меньший (S, mS)
    labels = [states[i] for i in np.argmax(np.abs(vectors) ** 2, axis=0)]
    perm = sorted(range(n), key=lambda k: (energies[k], labels[k]))

    logger.debug(f"Perturbation order {order}: ground={energies[perm[0]]:.6f}")
    return EigenSystem(
        energies=energies[perm],
        vectors=vectors[:, perm],
        labels=tuple(labels[k] for k in perm),
        order=order,
        basis=basis,
    )


# ═══════════════════════════════════════════════════════════════
# Тепловая карта |⟨ψk|dH|ψk′⟩|
# ═══════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class Heatmap:
    """Нормированная |⟨ψk|dH|ψk′⟩| в порядке меток (S, mS)."""

    magnitude: np.ndarray
    labels: Tuple[AngularIndex, ...]
    blocks: Tuple[Tuple[float, int, int], ...]

    def to_lines(self) -> List[str]:
        """TSV: блочные метаданные, затем row, col, S_row, S_col, magnitude."""
        lines = [f"#block S={s:g} rows={start}..{stop - 1}" for s, start, stop in self.blocks]
        lines.append("row\tcol\tS_row\tS_col\tlabel_row\tlabel_col\tmagnitude")
        for i, lab_i in enumerate(self.labels):
            for j, lab_j in enumerate(self.labels):
                lines.append(
                    f"{i}\t{j}\t{lab_i.s:g}\t{lab_j.s:g}\t{lab_i.label}\t{lab_j.label}\t"
                    f"{self.magnitude[i, j]:.12e}"
                )
        return lines


def heatmap(eigsys: EigenSystem, dh: OperatorMatrix) -> Heatmap:
    """|⟨ψk|dH|ψk′⟩|, переупорядоченная по меткам и нормированная на максимум 1."""
    magnitude = np.abs(eigsys.matrix_elements(dh))
    order = sorted(range(eigsys.size), key=lambda k: eigsys.labels[k])
    magnitude = magnitude[np.ix_(order, order)]
    peak = magnitude.max(initial=0.0)
    if peak > 0:
        magnitude = magnitude / peak
    labels = tuple(eigsys.labels[k] for k in order)
    return Heatmap(magnitude=magnitude, labels=labels, blocks=tuple(eigsys.basis.blocks()))


def select_levels(eigsys: EigenSystem, levels: Sequence[int]) -> List[int]:
    """Проверить 1-нумерацию уровней и вернуть 0-индексы."""
    indices = []
    for level in levels:
        if level < 1 or level > eigsys.size:
            raise ConfigError(f"level {level} outside 1..{eigsys.size}")
        indices.append(level - 1)
    if len(set(indices)) != len(indices):
        raise ConfigError(f"duplicate levels in {list(levels)}")
    return indices


# ═══════════════════════════════════════════════════════════════
# Уровни как функция связи g
# ═══════════════════════════════════════════════════════════════

LEVELS_REPORTED = 4


@dataclass(frozen=True)
class LevelRow:
    g: float
    energies: Tuple[float, ...]
    labels: Tuple[AngularIndex, ...]
    zero_order: Tuple[float, ...]
    zero_order_labels: Tuple[AngularIndex, ...]
    exact: Optional[Tuple[float, ...]] = None


@dataclass
class LevelTable:
    order: int
    rows: List[LevelRow]

    def columns(self) -> List[str]:
        names = ["g"]
        names += [f"eps{k}" for k in range(1, LEVELS_REPORTED + 1)]
        names += [f"label{k}" for k in range(1, LEVELS_REPORTED + 1)]
        names += [f"xi{k}" for k in range(1, LEVELS_REPORTED + 1)]
        names += [f"xi_label{k}" for k in range(1, LEVELS_REPORTED + 1)]
        if self.rows and self.rows[0].exact is not None:
            names += [f"exact{k}" for k in range(1, LEVELS_REPORTED + 1)]
        return names

    def to_rows(self) -> List[List]:
        out = []
        for row in self.rows:
            line: List = [row.g, *row.energies, *(lab.label for lab in row.labels)]
            line += [*row.zero_order, *(lab.label for lab in row.zero_order_labels)]
            if row.exact is not None:
                line += list(row.exact)
            out.append(line)
        return out


def levels_vs_g(
    params: DeviceParams,
    g_grid: Sequence[float],
    order: int,
    s_max: float = 3.0,
    exact: bool = False,
) -> LevelTable:
    """εk(g) для k = 1..4 вместе с уровнями нулевого порядка (и, опционально, точными)."""
    basis = AngularBasis(s_max)
    count = min(LEVELS_REPORTED, basis.physical_dim)
    rows = []
    for g in g_grid:
        current = params.with_coupling(float(g))
        modes = derive_modes(current)
        h0, _ = build_linear(modes, basis)
        dh = build_quartic(current, modes, basis)
        eigsys = perturb(h0, dh, basis, order)
        reference = perturb(h0, dh, basis, 0)
        rows.append(
            LevelRow(
                g=float(g),
                energies=tuple(float(e) for e in eigsys.energies[:count]),
                labels=eigsys.labels[:count],
                zero_order=tuple(float(e) for e in reference.energies[:count]),
                zero_order_labels=reference.labels[:count],
                exact=tuple(float(e) for e in exact_levels(current, modes, basis)[:count]) if exact else None,
            )
        )
    logger.info(f"Computed levels for {len(rows)} couplings at order {order}")
    return LevelTable(order=order, rows=rows)
