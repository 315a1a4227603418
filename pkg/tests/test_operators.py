"""Unit tests for the Fock-space operator building blocks."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from matrixqm.errors import NonHermitianInput, UnsupportedGroup
from matrixqm.operators import (
    BasisSpec,
    SparseOperator,
    embed_boson,
    jordan_wigner,
    momentum_operator,
    position_operator,
    structure_constants,
    truncated_ladder,
)


class TestLadder:
    def test_raising_entries(self):
        # a_dag |n> = sqrt(n+1) |n+1>
        a, adag, n = truncated_ladder(5)
        dense = adag.to_dense()
        for k in range(4):
            assert dense[k + 1, k] == pytest.approx(np.sqrt(k + 1))
        assert np.count_nonzero(dense) == 4

    def test_adjoint_pair(self):
        a, adag, _ = truncated_ladder(6)
        assert a.max_abs_diff(adag.dag()) == 0.0

    def test_number_operator(self):
        a, adag, n = truncated_ladder(7)
        assert (adag @ a).max_abs_diff(n) < 1e-14

    @given(cutoff=st.integers(min_value=2, max_value=12))
    def test_commutator_on_interior(self, cutoff):
        # [a, a_dag] = 1 except in the top truncated state
        a, adag, _ = truncated_ladder(cutoff)
        comm = (a @ adag - adag @ a).to_dense()
        interior = np.diag(comm)[: cutoff - 1]
        np.testing.assert_allclose(interior, 1.0, atol=1e-14)
        assert comm[cutoff - 1, cutoff - 1] == pytest.approx(1 - cutoff)


class TestPhaseSpace:
    @given(cutoff=st.integers(min_value=3, max_value=10),
           mass=st.floats(min_value=0.2, max_value=5.0))
    def test_canonical_commutator_interior(self, cutoff, mass):
        x = position_operator(cutoff, mass).to_dense()
        p = momentum_operator(cutoff, mass).to_dense()
        comm = x @ p - p @ x
        interior = np.diag(comm)[: cutoff - 1]
        np.testing.assert_allclose(interior, 1j, atol=1e-13)

    def test_hermitian(self):
        assert position_operator(6, 1.3).is_hermitian()
        assert momentum_operator(6, 1.3).is_hermitian()

    def test_oscillator_hamiltonian_spectrum(self):
        # p^2/2 + m^2 x^2 / 2 has eigenvalues m (n + 1/2) below the cutoff edge
        m = 1.7
        x = position_operator(12, m).to_dense()
        p = momentum_operator(12, m).to_dense()
        h = 0.5 * (p @ p) + 0.5 * m * m * (x @ x)
        w = np.linalg.eigvalsh(0.5 * (h + h.conj().T))
        expected = m * (np.arange(10) + 0.5)
        np.testing.assert_allclose(np.sort(w)[:6], expected[:6], atol=1e-9)


class TestStructureConstants:
    def test_su2_is_sqrt2_levi_civita(self):
        sc = structure_constants(2)
        eps = np.zeros((3, 3, 3))
        for i, j, k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
            eps[i, j, k] = 1.0
            eps[j, i, k] = -1.0
        np.testing.assert_allclose(sc.f, np.sqrt(2.0) * eps, atol=1e-14)

    @pytest.mark.parametrize("N", [2, 3])
    def test_generator_normalization(self, N):
        sc = structure_constants(N)
        n = N * N - 1
        gram = np.einsum("aij,bji->ab", sc.generators, sc.generators)
        np.testing.assert_allclose(gram, np.eye(n), atol=1e-13)

    @pytest.mark.parametrize("N", [2, 3])
    def test_f_matches_commutators(self, N):
        # [tau_a, tau_b] = i f_abc tau_c in the trace-orthonormal basis
        sc = structure_constants(N)
        comm = np.einsum("aij,bjk->abik", sc.generators, sc.generators)
        comm = comm - np.einsum("bij,ajk->abik", sc.generators, sc.generators)
        rebuilt = 1j * np.einsum("abc,cik->abik", sc.f, sc.generators)
        np.testing.assert_allclose(comm, rebuilt, atol=1e-13)

    @pytest.mark.parametrize("N", [2, 3])
    def test_total_antisymmetry_and_jacobi(self, N):
        f = structure_constants(N).f
        np.testing.assert_allclose(f, -np.swapaxes(f, 0, 1), atol=1e-13)
        np.testing.assert_allclose(f, -np.swapaxes(f, 1, 2), atol=1e-13)
        jac = (np.einsum("ade,bce->abcd", f, f)
               + np.einsum("bde,cae->abcd", f, f)
               + np.einsum("cde,abe->abcd", f, f))
        np.testing.assert_allclose(jac, 0.0, atol=1e-12)

    def test_unsupported_group(self):
        with pytest.raises((UnsupportedGroup, ValueError)):
            structure_constants(1)


class TestBasisOrdering:
    def test_site_zero_is_most_significant(self):
        # number operator on site 0 of a 2-site, cutoff-2 basis
        basis = BasisSpec.bosonic(N=2, cutoff=2, d=2)
        _, _, n = truncated_ladder(2)
        site0 = embed_boson(0, n, basis).to_dense()
        dim = basis.dim
        diag = np.real(np.diag(site0))
        # states dim/2 .. dim-1 have the site-0 mode excited
        np.testing.assert_allclose(diag[: dim // 2], 0.0, atol=0)
        np.testing.assert_allclose(diag[dim // 2:], 1.0, atol=0)

    def test_boson_site_index_alpha_inner(self):
        basis = BasisSpec.bosonic(N=2, cutoff=3, d=2)
        assert basis.boson_site(0, 0) == 0
        assert basis.boson_site(0, 2) == 2
        assert basis.boson_site(1, 0) == 3
        assert basis.n_sites == 6
        assert basis.dim == 3 ** 6

    def test_minibmn_appends_fermions(self):
        basis = BasisSpec.minibmn(N=2, cutoff=2, d=2)
        assert basis.n_boson_sites == 6
        assert basis.n_fermion_sites == 3
        assert basis.fermion_site(0) == 6
        assert basis.dim == 2 ** 6 * 2 ** 3


class TestJordanWigner:
    def test_anticommutators(self):
        basis = BasisSpec.minibmn(N=2, cutoff=2, d=2)
        xis = [jordan_wigner(k, basis) for k in range(3)]
        eye = SparseOperator.identity(basis.dim)
        for a in range(3):
            xa, xa_dag = xis[a]
            assert np.max(np.abs((xa @ xa).to_dense())) < 1e-14
            for b in range(3):
                xb, xb_dag = xis[b]
                anti = (xa @ xb_dag + xb_dag @ xa).to_dense()
                expected = eye.to_dense() if a == b else 0.0
                np.testing.assert_allclose(anti, expected, atol=1e-14)

    def test_commutes_with_bosons(self):
        basis = BasisSpec.minibmn(N=2, cutoff=2, d=2)
        _, adag, _ = truncated_ladder(2)
        b = embed_boson(basis.boson_site(0, 1), adag, basis)
        xi, _ = jordan_wigner(1, basis)
        assert np.max(np.abs((b @ xi - xi @ b).to_dense())) < 1e-14


class TestSparseOperator:
    def test_from_entries_merges_duplicates(self):
        op = SparseOperator.from_entries(
            2, [(0, 1, 1.0), (0, 1, 2.0), (1, 0, 3.0)])
        dense = op.to_dense()
        assert dense[0, 1] == pytest.approx(3.0)
        assert dense[1, 0] == pytest.approx(3.0)

    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_matvec_matches_dense(self, seed):
        rng = np.random.default_rng(seed)
        m = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        m = m + m.conj().T
        op = SparseOperator.from_entries(
            8, [(i, j, m[i, j]) for i in range(8) for j in range(8)])
        v = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        np.testing.assert_allclose(op.matvec(v), m @ v, atol=1e-12)

    def test_hermiticity_detection(self):
        op = SparseOperator.from_entries(2, [(0, 1, 1.0)])
        assert not op.is_hermitian()
        assert (op + op.dag()).is_hermitian()
