"""
Unit tests для углового базиса и операторов Швингера.
"""

from hypothesis import given, strategies as st
import numpy as np
import pytest

from src.core.basis import (
    AngularBasis,
    AngularIndex,
    export_operator,
    ladder_matrix,
    spin_matrices,
)
from src.core.errors import ConfigError
from src.core.types import LadderKind, Mode


class TestAngularIndex:
    """(S, mS) через удвоенные целые"""

    def test_labels(self):
        assert AngularIndex.from_spin(0, 0).label == "|0,0⟩"
        assert AngularIndex.from_spin(0.5, -0.5).label == "|1/2,-1/2⟩"
        assert AngularIndex.from_spin(1, -1).label == "|1,-1⟩"
        assert AngularIndex.from_spin(1.5, 0.5).label == "|3/2,1/2⟩"

    def test_occupations(self):
        state = AngularIndex.from_spin(1.5, -0.5)
        assert (state.n_up, state.n_down) == (1, 2)
        assert state.occupation(Mode.UP) == 1
        assert state.parity == 1

    @pytest.mark.parametrize("two_s,two_m", [(-1, 1), (2, 4), (2, 1)])
    def test_invalid_index(self, two_s, two_m):
        with pytest.raises(ConfigError):
            AngularIndex(two_s=two_s, two_m=two_m)

    def test_non_half_integer_spin(self):
        with pytest.raises(ConfigError):
            AngularIndex.from_spin(0.3, 0.3)

    @given(n_up=st.integers(0, 40), n_down=st.integers(0, 40))
    def test_occupations_define_index(self, n_up, n_down):
        state = AngularIndex.from_occupations(n_up, n_down)
        assert state.s == (n_up + n_down) / 2
        assert state.m == (n_up - n_down) / 2


class TestAngularBasis:
    """Порядок и размеры"""

    def test_sizes(self, basis):
        assert basis.physical_dim == 28
        assert basis.dim == 66
        assert basis.max_quanta == 10

    def test_ordering(self, basis):
        labels = [st.label for st in basis.physical_states[:6]]
        assert labels == ["|0,0⟩", "|1/2,-1/2⟩", "|1/2,1/2⟩", "|1,-1⟩", "|1,0⟩", "|1,1⟩"]
        assert list(basis.physical_states) == sorted(basis.physical_states)

    def test_blocks(self, basis):
        blocks = list(basis.blocks())
        assert len(blocks) == 7
        assert blocks[0] == (0.0, 0, 1)
        assert blocks[-1] == (3.0, 21, 28)

    def test_index_outside_basis(self, basis):
        with pytest.raises(ConfigError):
            basis.index_of_spin(6, 0)

    @pytest.mark.parametrize("s_max", [-0.5, 0.3])
    def test_invalid_s_max(self, s_max):
        with pytest.raises(ConfigError):
            AngularBasis(s_max)


class TestLadderOperators:
    """a, a† в буфере"""

    def test_annihilation_elements(self, basis):
        a_down = ladder_matrix(basis, Mode.DOWN, LadderKind.ANNIHILATE).entries
        source = basis.index_of(AngularIndex.from_occupations(0, 3))
        target = basis.index_of(AngularIndex.from_occupations(0, 2))
        assert a_down[target, source] == pytest.approx(np.sqrt(3))

    def test_creation_is_adjoint(self, basis):
        a_up = ladder_matrix(basis, Mode.UP, LadderKind.ANNIHILATE)
        create = ladder_matrix(basis, Mode.UP, LadderKind.CREATE)
        np.testing.assert_array_equal(create.entries, a_up.dagger().entries)

    def test_commutator_below_truncation(self, basis):
        """[a, a†] = 1 на состояниях ниже границы буфера"""
        for mode in Mode:
            a = ladder_matrix(basis, mode, LadderKind.ANNIHILATE)
            comm = (a @ a.dagger() - a.dagger() @ a).entries
            inside = np.array([st.n_total < basis.max_quanta for st in basis.states])
            np.testing.assert_allclose(comm[np.ix_(inside, inside)], np.eye(inside.sum()), atol=1e-12)


class TestSpinOperators:
    """S+ = a†↑a↓ и алгебра углового момента"""

    def test_commutators(self, spin):
        sx, sy, sz = (op.entries for op in spin.cartesian())
        np.testing.assert_allclose(sx @ sy - sy @ sx, 1j * sz, atol=1e-12)
        np.testing.assert_allclose(sy @ sz - sz @ sy, 1j * sx, atol=1e-12)
        np.testing.assert_allclose(sz @ sx - sx @ sz, 1j * sy, atol=1e-12)

    def test_casimir_is_diagonal(self, basis, spin):
        """S² = S(S+1) на каждом состоянии"""
        s2 = sum(op.entries @ op.entries for op in spin.cartesian())
        expected = np.diag([st.s * (st.s + 1) for st in basis.states])
        np.testing.assert_allclose(s2, expected, atol=1e-12)

    def test_hermitian(self, spin):
        for op in spin.cartesian():
            assert op.hermiticity_error() < 1e-15

    def test_raising_keeps_total_spin(self, basis, spin):
        rows, cols = np.nonzero(np.abs(spin.s_plus.entries) > 0)
        for r, c in zip(rows, cols):
            assert basis.states[r].two_s == basis.states[c].two_s
            assert basis.states[r].two_m == basis.states[c].two_m + 2

    def test_projection(self, basis, spin):
        projected = spin.project(basis)
        assert projected.sz.dim == basis.physical_dim
        assert projected.sz.physical

    def test_export(self, spin):
        lines = export_operator(spin.sz, tolerance=1e-12)
        assert lines[0] == "row\tcol\tre\tim"
        assert lines[1].split("\t")[:2] == ["1", "1"]
        assert float(lines[1].split("\t")[2]) == pytest.approx(-0.5)
