"""Unit tests for the eigensolvers and the truncation scan."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from matrixqm.models import BosonicParams, Deformation, MiniBMNParams
from matrixqm.operators import SparseOperator
from matrixqm.spectrum import (
    dense_eigh_oracle,
    expectation,
    ground_energy_diffs,
    lowest_eigenpairs,
    truncation_scan,
    write_scan_csv,
)


def _random_hermitian(rng, n):
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (m + m.conj().T)


class TestDenseOracle:
    # the hand-rolled Householder + QL oracle is the independent route used
    # to validate the iterative library solver; here it is checked against
    # closed-form spectra, not against another library.

    def test_diagonal_matrix(self):
        d = np.array([3.0, -1.0, 2.0, 0.0])
        w = dense_eigh_oracle(np.diag(d))
        np.testing.assert_allclose(w, np.sort(d), atol=1e-13)

    def test_two_by_two_closed_form(self):
        a, b, c = 1.0, 2.5, -0.7
        m = np.array([[a, c], [c, b]])
        mean, half = 0.5 * (a + b), np.hypot(0.5 * (a - b), c)
        w = dense_eigh_oracle(m)
        np.testing.assert_allclose(w, [mean - half, mean + half], atol=1e-13)

    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_trace_and_residual_properties(self, seed):
        rng = np.random.default_rng(seed)
        m = _random_hermitian(rng, 12)
        w = dense_eigh_oracle(m)
        assert np.all(np.diff(w) >= -1e-12)
        assert np.sum(w) == pytest.approx(np.trace(m).real, abs=1e-10)
        assert np.sum(w * w) == pytest.approx(
            np.sum(np.abs(m) ** 2), abs=1e-9)

    def test_complex_hermitian(self, rng):
        m = _random_hermitian(rng, 30)
        w = dense_eigh_oracle(m)
        # Rayleigh bound check against explicit vectors from the power
        # method on the shifted matrix
        shifted = np.linalg.norm(m, "fro") * np.eye(30) - m
        v = rng.standard_normal(30).astype(complex)
        for _ in range(5000):
            v = shifted @ v
            v /= np.linalg.norm(v)
        rayleigh = np.real(np.vdot(v, m @ v))
        assert rayleigh == pytest.approx(w[0], abs=1e-6)


class TestLowestEigenpairs:
    def test_matches_dense_oracle(self, rng):
        # dual route: the iterative sparse solver against the hand-rolled
        # dense oracle
        m = _random_hermitian(rng, 60)
        op = SparseOperator.from_entries(
            60, [(i, j, m[i, j]) for i in range(60) for j in range(60)])
        res = lowest_eigenpairs(op, k=4, seed=1)
        np.testing.assert_allclose(res.values, dense_eigh_oracle(m)[:4],
                                   atol=1e-9)

    def test_exact_zero_mode_found(self):
        # shifted-spectrum solve must not lose an exactly-zero eigenvalue
        d = np.concatenate([[0.0], np.linspace(1.0, 9.0, 63)])
        op = SparseOperator.from_entries(
            64, [(i, i, d[i]) for i in range(64)])
        res = lowest_eigenpairs(op, k=2, seed=2)
        assert abs(res.values[0]) < 1e-11
        assert res.values[1] == pytest.approx(1.0, abs=1e-10)

    def test_eigenvector_residual(self, rng):
        m = _random_hermitian(rng, 40)
        op = SparseOperator.from_entries(
            40, [(i, j, m[i, j]) for i in range(40) for j in range(40)])
        res = lowest_eigenpairs(op, k=3, seed=3)
        for i in range(3):
            v = res.vectors[:, i]
            assert np.linalg.norm(m @ v - res.values[i] * v) < 1e-9

    def test_expectation(self, rng):
        m = _random_hermitian(rng, 16)
        op = SparseOperator.from_entries(
            16, [(i, j, m[i, j]) for i in range(16) for j in range(16)])
        v = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        v /= np.linalg.norm(v)
        assert expectation(op, v) == pytest.approx(
            np.real(np.vdot(v, m @ v)), abs=1e-12)


class TestTruncationScan:
    def test_bosonic_rows(self):
        p = BosonicParams(N=2, lam=0.2, cutoff=3)
        rows = truncation_scan(p, [3, 4], levels=2)
        assert len(rows) == 4
        assert [r.cutoff for r in rows] == [3, 3, 4, 4]
        assert rows[0].model == "bosonic"
        assert rows[0].energy < rows[1].energy
        # undeformed ground energies match the dense oracle
        from matrixqm.models import build_bosonic_hamiltonian
        w = dense_eigh_oracle(build_bosonic_hamiltonian(p).to_dense())
        assert rows[0].energy == pytest.approx(w[0], abs=1e-8)

    def test_deformed_scan_records_penalty_fields(self):
        p = BosonicParams(N=2, lam=0.2, cutoff=3)
        rows = truncation_scan(p, [3], deformation=Deformation(c=3.0))
        assert rows[0].c == 3.0
        assert rows[0].g2 < 1e-3       # near-singlet ground state
        assert rows[0].m_exp == pytest.approx(1.0, abs=1e-3)

    def test_minibmn_scan(self):
        p = MiniBMNParams(N=2, mu=1.0, lam=0.5, cutoff=3)
        rows = truncation_scan(
            p, [3], deformation=Deformation(c=3.0, cprime=1.0))
        assert rows[0].model == "minibmn"
        assert abs(rows[0].energy) < 0.05     # near-BPS ground state

    def test_unsorted_cutoffs_rejected(self):
        p = BosonicParams(N=2, lam=0.2, cutoff=3)
        with pytest.raises(ValueError):
            truncation_scan(p, [4, 3])

    def test_ground_energy_diffs(self):
        p = BosonicParams(N=2, lam=0.2, cutoff=3)
        rows = truncation_scan(p, [3, 4, 5])
        diffs = ground_energy_diffs(rows)
        assert [c for c, _ in diffs] == [4, 5]
        assert all(d > 0 for _, d in diffs)

    def test_write_scan_csv(self, tmp_path):
        p = BosonicParams(N=2, lam=0.2, cutoff=3)
        rows = truncation_scan(p, [3])
        out = tmp_path / "scan.csv"
        write_scan_csv(rows, out)
        text = out.read_text()
        assert "Lambda" in text.splitlines()[0]
        assert len(text.splitlines()) == 2
