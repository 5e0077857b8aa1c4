"""
Гамильтониан в угловом базисе.

H0 диагонален (гармонические канонические моды), dH = −(E_C/12)·M⁴ это
квартичная поправка косинуса Джозефсона, Θ это оператор связи с внешним
напряжением: H_drive = −ħ·Θ·V(t).
"""

from dataclasses import dataclass
import logging

import numpy as np
from scipy import linalg

from src.core.basis import (
    AngularBasis,
    AngularIndex,
    OperatorMatrix,
    ladder_matrix,
)
from src.core.device import CanonicalModes, DeviceParams
from src.core.types import LadderKind, Mode

logger = logging.getLogger(__name__)


def spin_frequency(modes: CanonicalModes, s: float, m: float) -> float:
    """ξ(S, mS) = (ω↑ + ω↓)(S + 1/2) + (ω↑ − ω↓)·mS."""
    return (modes.omega_up + modes.omega_down) * (s + 0.5) + (modes.omega_up - modes.omega_down) * m


@dataclass(frozen=True)
class LinearSpectrum:
    """Энергии нулевого порядка ξ(S, mS) для буферного базиса."""

    basis: AngularBasis
    energies: np.ndarray

    def energy(self, state: AngularIndex) -> float:
        return float(self.energies[self.basis.index_of(state)])

    @property
    def physical(self) -> np.ndarray:
        return self.energies[: self.basis.physical_dim]


@dataclass(frozen=True)
class HamiltonianSet:
    """H0, dH и Θ на физическом блоке плюс спектр нулевого порядка."""

    h0: OperatorMatrix
    dh: OperatorMatrix
    theta: OperatorMatrix
    spectrum: LinearSpectrum


def build_linear(modes: CanonicalModes, basis: AngularBasis, project: bool = True):
    """Диагональный H0 и таблица ξ(S, mS)."""
    energies = np.array([spin_frequency(modes, st.s, st.m) for st in basis.states])
    h0 = OperatorMatrix(np.diag(energies).astype(complex))
    if project:
        h0 = h0.project(basis)
    return h0, LinearSpectrum(basis=basis, energies=energies)


def quadrature_operator(modes: CanonicalModes, basis: AngularBasis) -> OperatorMatrix:
    """M = ξ(↑,−)(a†↑ − a↑) − i·ξ(↓,−)(a†↓ + a↓) на буферном базисе."""
    a_up = ladder_matrix(basis, Mode.UP, LadderKind.ANNIHILATE)
    a_down = ladder_matrix(basis, Mode.DOWN, LadderKind.ANNIHILATE)
    xi_up = modes.mixing(Mode.UP, -1)
    xi_down = modes.mixing(Mode.DOWN, -1)
    return (a_up.dagger() - a_up) * xi_up + (a_down.dagger() + a_down) * (-1j * xi_down)


def build_quartic(
    params: DeviceParams,
    modes: CanonicalModes,
    basis: AngularBasis,
    project: bool = True,
) -> OperatorMatrix:
    """dH = −(E_C/12)·M⁴, посчитанный в буфере и затем спроецированный."""
    m = quadrature_operator(modes, basis)
    m2 = m @ m
    dh = (m2 @ m2) * (-params.E_C / 12.0)
    # M антиэрмитов, M⁴ эрмитов: убираем шум округления
    dh = OperatorMatrix(0.5 * (dh.entries + dh.entries.conj().T))
    if project:
        dh = dh.project(basis)
    return dh


def build_drive(modes: CanonicalModes, basis: AngularBasis, project: bool = True) -> OperatorMatrix:
    """Θ = v↑(a†↑ + a↑) + i·v↓(a†↓ − a↓)."""
    a_up = ladder_matrix(basis, Mode.UP, LadderKind.ANNIHILATE)
    a_down = ladder_matrix(basis, Mode.DOWN, LadderKind.ANNIHILATE)
    theta = (a_up.dagger() + a_up) * modes.drive_coefficient(Mode.UP) + (
        a_down.dagger() - a_down
    ) * (1j * modes.drive_coefficient(Mode.DOWN))
    if project:
        theta = theta.project(basis)
    return theta


def build_hamiltonians(params: DeviceParams, modes: CanonicalModes, basis: AngularBasis) -> HamiltonianSet:
    h0, spectrum = build_linear(modes, basis)
    dh = build_quartic(params, modes, basis)
    theta = build_drive(modes, basis)
    logger.debug(
        f"Hamiltonians built: dim={h0.dim}, |dH|max={np.max(np.abs(dh.entries)):.4g}"
    )
    return HamiltonianSet(h0=h0, dh=dh, theta=theta, spectrum=spectrum)


def exact_levels(params: DeviceParams, modes: CanonicalModes, basis: AngularBasis) -> np.ndarray:
    """Точная диагонализация H0 + dH на всём буфере (оракул для теории возмущений)."""
    h0, _ = build_linear(modes, basis, project=False)
    dh = build_quartic(params, modes, basis, project=False)
    return linalg.eigvalsh((h0 + dh).entries)
