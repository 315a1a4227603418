"""Unit tests for the two-matrix Hamiltonians, symmetries and deformations."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from matrixqm.errors import DimensionMismatch
from matrixqm.models import (
    BosonicParams,
    Deformation,
    MiniBMNParams,
    bosonic_factors,
    build_bosonic_hamiltonian,
    build_gauge_generators,
    build_minibmn_hamiltonian,
    build_so2_generator,
    build_supercharge,
    deform,
    deform_factors,
    fermion_number_operator,
    minibmn_factors,
)


def _comm_norm(a, b):
    return np.max(np.abs((a @ b - b @ a).to_dense()))


class TestBosonicHamiltonian:
    def test_free_ground_energy_is_three(self):
        # six oscillators at m = 1: E0 = 6 * (1/2) = 3 exactly
        p = BosonicParams(N=2, lam=0.0, cutoff=3)
        w = np.linalg.eigvalsh(build_bosonic_hamiltonian(p).to_dense())
        assert w[0] == pytest.approx(3.0, abs=1e-12)
        # first excited level: one quantum in any of the six modes
        np.testing.assert_allclose(w[1:7], 4.0, atol=1e-12)

    def test_hermitian(self):
        p = BosonicParams(N=2, lam=1.0, cutoff=3)
        assert build_bosonic_hamiltonian(p).is_hermitian()

    def test_symmetries_away_from_cutoff(self):
        # truncating each mode breaks the symmetry algebra only at the
        # cutoff edge: on states whose occupations leave room for the
        # quartic (raises a mode by <= 2) after the quadratic generator
        # (raises by 1), the commutators vanish identically.
        p = BosonicParams(N=2, lam=0.7, cutoff=5)
        h = build_bosonic_hamiltonian(p)
        m = build_so2_generator(p)
        gens = build_gauge_generators(p)
        assert all(g.is_hermitian() for g in gens)
        comms = [h @ g - g @ h for g in gens + [m]]
        dim = p.basis().dim
        occ = np.array(np.unravel_index(np.arange(dim), (5,) * 6)).T
        for s in np.nonzero(np.all(occ <= 1, axis=1))[0]:
            e = np.zeros(dim)
            e[s] = 1.0
            for c in comms:
                assert np.linalg.norm(c.matvec(e)) < 1e-12

    def test_factored_matvec_matches_assembled(self, rng):
        p = BosonicParams(N=2, lam=1.3, cutoff=3)
        factors = bosonic_factors(p)
        dense = factors.to_sparse().to_dense()
        v = rng.standard_normal(factors.dim)
        np.testing.assert_allclose(factors.matvec(v), dense @ v,
                                   atol=1e-10)

    def test_g2_is_thooft_coupling_over_n(self):
        assert BosonicParams(N=2, lam=1.0, cutoff=3).g2 == pytest.approx(0.5)
        assert BosonicParams(N=3, lam=1.2, cutoff=3).g2 == pytest.approx(0.4)

    def test_basis_mismatch_rejected(self):
        p = BosonicParams(N=2, lam=1.0, cutoff=3)
        q = BosonicParams(N=2, lam=1.0, cutoff=4)
        with pytest.raises(DimensionMismatch):
            bosonic_factors(p, q.basis())


class TestDeformation:
    def test_matches_explicit_penalty(self):
        p = BosonicParams(N=2, lam=0.5, cutoff=3)
        h = build_bosonic_hamiltonian(p)
        gens = build_gauge_generators(p)
        m = build_so2_generator(p)
        d = Deformation(c=2.0, cprime=1.5, J=1.0)
        lhs = deform(h, gens, m, d).to_dense()
        rhs = h.to_dense().astype(complex)
        for g in gens:
            gd = g.to_dense()
            rhs = rhs + d.c * (gd @ gd)
        md = m.to_dense() - d.J * np.eye(h.dim)
        rhs = rhs + d.cprime * (md @ md)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_factored_route_agrees_with_dense_route(self, rng):
        p = BosonicParams(N=2, lam=0.5, cutoff=3)
        gens = build_gauge_generators(p)
        m = build_so2_generator(p)
        d = Deformation(c=3.0, cprime=1.0, J=0.0)
        h_dense = deform(build_bosonic_hamiltonian(p), gens, m, d).to_dense()
        factors = deform_factors(bosonic_factors(p), gens, m, d)
        v = rng.standard_normal(factors.dim)
        np.testing.assert_allclose(factors.matvec(v), h_dense @ v,
                                   atol=1e-10)

    def test_negative_penalty_rejected(self):
        with pytest.raises(ValueError):
            Deformation(c=-1.0)

    def test_penalty_lifts_nonsinglets_only(self):
        # the deformed ground state keeps the undeformed near-singlet
        # energy up to c times its (truncation-induced) Casimir expectation
        p = BosonicParams(N=2, lam=0.4, cutoff=3)
        h = build_bosonic_hamiltonian(p)
        gens = build_gauge_generators(p)
        w0 = np.linalg.eigvalsh(h.to_dense())[0]
        wp = np.linalg.eigvalsh(
            deform(h, gens, None, Deformation(c=5.0)).to_dense())[0]
        assert w0 - 1e-12 <= wp <= w0 + 5e-3


class TestSO2Generator:
    def test_integer_spectrum(self):
        p = BosonicParams(N=2, lam=0.3, cutoff=3)
        w = np.linalg.eigvalsh(build_so2_generator(p).to_dense())
        np.testing.assert_allclose(w, np.round(w), atol=1e-10)

    def test_minibmn_half_integer_spectrum(self):
        p = MiniBMNParams(N=2, mu=1.0, lam=0.3, cutoff=2)
        w = np.linalg.eigvalsh(build_so2_generator(p).to_dense())
        np.testing.assert_allclose(2 * w, np.round(2 * w), atol=1e-10)


class TestMiniBMN:
    def test_hermitian(self):
        p = MiniBMNParams(N=2, mu=1.0, lam=0.6, cutoff=2)
        assert build_minibmn_hamiltonian(p).is_hermitian()

    def test_symmetries_away_from_cutoff(self):
        # as in the bosonic model, [H, G_a] and [H, M] vanish except at the
        # cutoff edge; probe boson-vacuum states with any fermion content
        p = MiniBMNParams(N=2, mu=1.0, lam=0.6, cutoff=4)
        h = build_minibmn_hamiltonian(p)
        comms = [h @ g - g @ h
                 for g in build_gauge_generators(p)
                 + [build_so2_generator(p)]]
        for s in range(8):
            e = np.zeros(h.dim, dtype=complex)
            e[s] = 1.0
            for c in comms:
                assert np.linalg.norm(c.matvec(e)) < 1e-12

    def test_free_ground_state_is_bps_zero(self):
        from matrixqm.spectrum import lowest_eigenpairs
        p = MiniBMNParams(N=2, mu=1.0, lam=0.0, cutoff=3)
        res = lowest_eigenpairs(build_minibmn_hamiltonian(p), k=1, seed=3)
        assert abs(res.values[0]) < 1e-10

    def test_factored_matvec_matches_assembled(self, rng):
        p = MiniBMNParams(N=2, mu=1.0, lam=0.8, cutoff=2)
        factors = minibmn_factors(p)
        dense = factors.to_sparse().to_dense()
        v = rng.standard_normal(factors.dim) \
            + 1j * rng.standard_normal(factors.dim)
        np.testing.assert_allclose(factors.matvec(v), dense @ v, atol=1e-10)

    def test_supercharge_algebra_on_low_states(self):
        # {Q, Q^dag} = 2 (H - mu M) holds exactly in the untruncated theory;
        # on truncation-deformed low-lying eigenstates the residual is small
        # and shrinks as the cutoff grows.
        from matrixqm.spectrum import lowest_eigenpairs
        residuals = []
        for cutoff in (3, 4):
            p = MiniBMNParams(N=2, mu=1.0, lam=0.2, cutoff=cutoff)
            h = build_minibmn_hamiltonian(p)
            m = build_so2_generator(p)
            q = build_supercharge(p)
            hp = deform(h, build_gauge_generators(p), m,
                        Deformation(c=float(cutoff), cprime=1.0, J=0.0))
            res = lowest_eigenpairs(hp, k=1, seed=5)
            gs = res.vectors[:, 0].astype(complex)
            anti_gs = q.matvec(q.dag().matvec(gs)) \
                + q.dag().matvec(q.matvec(gs))
            target_gs = 2.0 * (h.matvec(gs) - m.matvec(gs))
            residuals.append(float(np.abs(np.vdot(gs, anti_gs - target_gs))))
        assert residuals[0] < 5e-3
        assert residuals[1] < residuals[0]

    def test_supercharge_is_parity_odd(self):
        from matrixqm.models import fermion_parity_operator
        p = MiniBMNParams(N=2, mu=1.0, lam=0.5, cutoff=2)
        q = build_supercharge(p)
        par = fermion_parity_operator(p.basis())
        anti = q @ par + par @ q
        assert np.max(np.abs(anti.to_dense())) < 1e-13

    def test_fermion_number_commutes_with_h(self):
        p = MiniBMNParams(N=2, mu=1.0, lam=0.5, cutoff=2)
        h = build_minibmn_hamiltonian(p)
        nf = fermion_number_operator(p.basis())
        # the Yukawa term mixes fermion numbers in pairs: H commutes with
        # fermion parity, not number
        assert _comm_norm(h, nf) > 1e-3

    @given(lam=st.floats(min_value=0.0, max_value=2.0))
    def test_ground_energy_nonnegative(self, lam):
        # supersymmetric models have H = {Q, Q^dag}/2 + mu M >= 0 spectra in
        # the continuum; the truncated ground energy stays above a small
        # negative floor
        p = MiniBMNParams(N=2, mu=1.0, lam=lam, cutoff=2)
        w = np.linalg.eigvalsh(build_minibmn_hamiltonian(p).to_dense())
        assert w[0] > -0.2
