"""
Unit tests для H0, квартичной поправки и оператора накачки.

Квартичные элементы сверяются с независимой сборкой в произведении
фоковских пространств двух мод.
"""

import numpy as np
import pytest

from src.core.device import derive_modes
from src.core.hamiltonian import (
    build_drive,
    build_hamiltonians,
    build_linear,
    build_quartic,
    exact_levels,
    spin_frequency,
)
from src.core.perturbation import perturb
from src.core.types import Mode

FOCK_MAX = 12


def fock_quadrature(modes, n_max: int = FOCK_MAX) -> np.ndarray:
    """M = ξ(↑,−)(a†↑ − a↑) − i·ξ(↓,−)(a†↓ + a↓) в |n↑⟩⊗|n↓⟩."""
    a = np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(complex)
    eye = np.eye(n_max + 1)
    a_up, a_down = np.kron(a, eye), np.kron(eye, a)
    return modes.mixing(Mode.UP, -1) * (a_up.conj().T - a_up) - 1j * modes.mixing(Mode.DOWN, -1) * (
        a_down.conj().T + a_down
    )


def fock_index(state, n_max: int = FOCK_MAX) -> int:
    return state.n_up * (n_max + 1) + state.n_down


class TestLinearHamiltonian:
    """H0 = ξ(S, mS) на диагонали"""

    def test_zero_point(self, reference_modes):
        expected = 0.5 * (reference_modes.omega_up + reference_modes.omega_down)
        assert spin_frequency(reference_modes, 0, 0) == pytest.approx(expected)

    def test_diagonal_matches_occupations(self, reference_modes, basis):
        h0, spectrum = build_linear(reference_modes, basis)
        for i, st in enumerate(basis.physical_states):
            expected = reference_modes.omega_up * (st.n_up + 0.5) + reference_modes.omega_down * (st.n_down + 0.5)
            assert h0.entries[i, i].real == pytest.approx(expected, rel=1e-13)
        assert spectrum.energy(basis.physical_states[3]) == pytest.approx(h0.entries[3, 3].real)
        assert len(spectrum.physical) == basis.physical_dim
        assert np.count_nonzero(h0.entries - np.diag(np.diag(h0.entries))) == 0


class TestQuarticCorrection:
    """dH = −(E_C/12)·M⁴"""

    def test_duffing_diagonal_when_decoupled(self, reference_params, basis):
        """g = 0: ⟨n|X⁴|n⟩ = 6n² + 6n + 3 для трансмонной моды"""
        params = reference_params.with_coupling(0.0)
        modes = derive_modes(params)
        dh = build_quartic(params, modes, basis)
        for n in range(7):
            idx = basis.index_of_spin(n / 2, -n / 2)
            expected = -params.E_C / 12.0 * (6 * n * n + 6 * n + 3)
            assert dh.entries[idx, idx].real == pytest.approx(expected, rel=1e-12)

    def test_against_fock_oracle(self, reference_params, reference_modes, basis):
        dh = build_quartic(reference_params, reference_modes, basis)
        m = fock_quadrature(reference_modes)
        m2 = m @ m
        oracle = -reference_params.E_C / 12.0 * (m2 @ m2)
        idx = [fock_index(st) for st in basis.physical_states]
        np.testing.assert_allclose(dh.entries, oracle[np.ix_(idx, idx)], atol=1e-10)

    def test_hermitian(self, reference_params, reference_modes, basis):
        dh = build_quartic(reference_params, reference_modes, basis)
        assert dh.hermiticity_error() == 0.0

    def test_parity_selection_rule(self, reference_params, reference_modes, basis):
        """Нечётное ΔN (полуцелое ΔS) даёт точный ноль"""
        dh = build_quartic(reference_params, reference_modes, basis).entries
        parity = basis.parity[: basis.physical_dim]
        odd = parity[:, None] != parity[None, :]
        assert np.all(dh[odd] == 0)

    def test_buffer_protects_physical_block(self, reference_params, reference_modes, basis):
        """M⁴ считается в буфере, затем проецируется"""
        full = build_quartic(reference_params, reference_modes, basis, project=False)
        assert full.dim == basis.dim
        assert not full.physical
        np.testing.assert_array_equal(full.project(basis).entries, build_quartic(reference_params, reference_modes, basis).entries)


class TestDriveOperator:
    """Θ = v↑(a†↑ + a↑) + i·v↓(a†↓ − a↓)"""

    def test_hermitian(self, reference_modes, basis):
        assert build_drive(reference_modes, basis).hermiticity_error() < 1e-18

    def test_changes_quanta_by_one(self, reference_modes, basis):
        theta = build_drive(reference_modes, basis).entries
        rows, cols = np.nonzero(np.abs(theta) > 0)
        for r, c in zip(rows, cols):
            assert abs(basis.states[r].n_total - basis.states[c].n_total) == 1

    def test_transmon_matrix_element(self, reference_modes, basis):
        theta = build_drive(reference_modes, basis).entries
        ground = basis.index_of_spin(0, 0)
        excited = basis.index_of_spin(0.5, -0.5)
        assert theta[excited, ground] == pytest.approx(1j * reference_modes.drive_coefficient(Mode.DOWN))


class TestExactLevels:
    """Точная диагонализация как оракул второго порядка"""

    def test_second_order_close_to_exact(self, reference_params, reference_modes, basis):
        hams = build_hamiltonians(reference_params, reference_modes, basis)
        exact = exact_levels(reference_params, reference_modes, basis)[:4]
        first = perturb(hams.h0, hams.dh, basis, 1).energies[:4]
        second = perturb(hams.h0, hams.dh, basis, 2).energies[:4]
        # поправка третьего порядка заметна только для |1,−1⟩
        np.testing.assert_allclose(second, exact, atol=0.05)
        assert abs(second[0] - exact[0]) < 1e-3
        assert abs(second[1] - exact[1]) < 1e-2
        assert abs(second[0] - exact[0]) < abs(first[0] - exact[0])
