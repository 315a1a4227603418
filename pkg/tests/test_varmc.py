"""Unit tests for the autoregressive-flow variational Monte Carlo module."""

import numpy as np
import pytest

from matrixqm.errors import DegenerateDenominator, Diverged
from matrixqm.models import BosonicParams
from matrixqm.varmc import (
    AutoregressiveAnsatz,
    TrainConfig,
    energy_and_grad,
    gauge_casimir_estimate,
    haar_su_n,
    load_ansatz,
    local_energy,
    log_density,
    sample,
    save_ansatz,
    score_gradient,
    singlet_expectation,
    train,
    write_history_csv,
)

_MODEL = BosonicParams(N=2, lam=1.0, cutoff=2)   # cutoff unused by varmc
_DIM = 6                                          # d * (N^2 - 1)


def _free_exact_ansatz():
    # unit-frequency Gaussian ground state: each conditioner must emit
    # (location 0, log-scale -log(2)/2) so that |psi|^2 = prod N(0, 1/2)
    ansatz = AutoregressiveAnsatz.create(_DIM, alpha=1, seed=0)
    import jax.numpy as jnp
    for p in ansatz.params:
        p["out_b"] = jnp.asarray([0.0, -0.5 * np.log(2.0)])
    return ansatz


class TestDensity:
    def test_initial_density_is_unit_gaussian(self, rng):
        ansatz = AutoregressiveAnsatz.create(_DIM, seed=1)
        x = rng.standard_normal((10, _DIM))
        expected = -0.5 * np.sum(x * x, axis=1) \
            - 0.5 * _DIM * np.log(2 * np.pi)
        np.testing.assert_allclose(log_density(ansatz, x), expected,
                                   atol=1e-12)

    def test_samples_match_density_moments(self, rng):
        ansatz = AutoregressiveAnsatz.create(_DIM, seed=2)
        xs = sample(ansatz, 200_000, rng)
        assert xs.shape == (200_000, _DIM)
        np.testing.assert_allclose(xs.mean(axis=0), 0.0, atol=0.02)
        np.testing.assert_allclose(xs.std(axis=0), 1.0, atol=0.02)

    def test_density_normalized_by_quadrature(self):
        # integrate |psi|^2 over a 2-coordinate ansatz on a dense grid
        ansatz = AutoregressiveAnsatz.create(2, seed=3)
        grid = np.linspace(-8, 8, 401)
        xx, yy = np.meshgrid(grid, grid)
        pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
        p = np.exp(log_density(ansatz, pts))
        integral = p.sum() * (grid[1] - grid[0]) ** 2
        assert integral == pytest.approx(1.0, abs=1e-6)

    def test_sampling_reproducible(self):
        ansatz = AutoregressiveAnsatz.create(_DIM, seed=4)
        a = sample(ansatz, 50, np.random.default_rng(9))
        b = sample(ansatz, 50, np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)


class TestLocalEnergy:
    def test_free_theory_constant_local_energy(self, rng):
        # at lambda = 0 the exact ansatz gives local energy identically 3
        model = BosonicParams(N=2, lam=0.0, cutoff=2)
        ansatz = _free_exact_ansatz()
        xs = sample(ansatz, 512, rng)
        eps = local_energy(ansatz, xs, model)
        np.testing.assert_allclose(eps, 3.0, atol=1e-10)
        assert np.var(eps) < 1e-10

    def test_harmonic_rayleigh_quotient_above_ground(self, rng):
        # any normalized trial state has <H> >= 3 in the free theory
        model = BosonicParams(N=2, lam=0.0, cutoff=2)
        ansatz = AutoregressiveAnsatz.create(_DIM, seed=5)
        xs = sample(ansatz, 4096, rng)
        eps = local_energy(ansatz, xs, model)
        assert eps.mean() > 3.0 - 3 * eps.std() / np.sqrt(len(eps))

    def test_quartic_term_raises_energy(self, rng):
        ansatz = _free_exact_ansatz()
        xs = sample(ansatz, 2048, rng)
        e0 = local_energy(ansatz, xs, BosonicParams(N=2, lam=0.0, cutoff=2))
        e1 = local_energy(ansatz, xs, BosonicParams(N=2, lam=1.0, cutoff=2))
        assert e1.mean() > e0.mean()


class TestGradients:
    def test_pathwise_gradient_matches_common_noise_fd(self):
        # same noise realization on both sides: the reparameterized
        # gradient equals the finite difference to first order
        model = BosonicParams(N=2, lam=0.5, cutoff=2)
        ansatz = AutoregressiveAnsatz.create(_DIM, seed=6)
        noise = np.random.default_rng(10).standard_normal((256, _DIM))
        value, grad = energy_and_grad(ansatz, noise, model)
        import jax.numpy as jnp
        eps = 1e-6
        # probe the coordinate-0 location parameter
        for idx in (0, 1):
            def shifted(delta):
                import copy
                params = [dict(p) for p in ansatz.params]
                vec = np.array(params[0]["out_b"])
                vec[idx] += delta
                params[0]["out_b"] = jnp.asarray(vec)
                shifted_ansatz = AutoregressiveAnsatz(
                    dim=_DIM, alpha=1, params=params)
                v, _ = energy_and_grad(shifted_ansatz, noise, model)
                return v
            fd = (shifted(eps) - shifted(-eps)) / (2 * eps)
            assert grad[0]["out_b"][idx] == pytest.approx(fd, abs=1e-5)

    def test_score_gradient_agrees_with_pathwise(self, rng):
        # independent estimators of the same gradient: compare a smooth
        # scalar projection within combined Monte Carlo error
        model = BosonicParams(N=2, lam=0.5, cutoff=2)
        ansatz = AutoregressiveAnsatz.create(_DIM, seed=7)
        noise = rng.standard_normal((20_000, _DIM))
        _, g_path = energy_and_grad(ansatz, noise, model)
        xs = sample(ansatz, 20_000, rng)
        _, g_score = score_gradient(ansatz, xs, model)
        a = np.array(g_path[0]["out_b"])
        b = np.array(g_score[0]["out_b"])
        # the score estimator has much higher variance than the pathwise
        # one at this batch size; agreement within its Monte Carlo error
        np.testing.assert_allclose(a, b, atol=0.2)


class TestCasimir:
    def test_free_exact_state_is_singlet(self, rng):
        model = BosonicParams(N=2, lam=0.0, cutoff=2)
        ansatz = _free_exact_ansatz()
        xs = sample(ansatz, 4096, rng)
        cas = gauge_casimir_estimate(ansatz, model, xs)
        assert cas == pytest.approx(0.0, abs=1e-10)

    def test_generic_state_violates(self, rng):
        model = BosonicParams(N=2, lam=0.0, cutoff=2)
        ansatz = AutoregressiveAnsatz.create(_DIM, seed=8)
        # asymmetric ansatz: shift one coordinate's location
        import jax.numpy as jnp
        ansatz.params[0]["out_b"] = jnp.asarray([1.5, 0.0])
        xs = sample(ansatz, 4096, rng)
        assert gauge_casimir_estimate(ansatz, model, xs) > 0.01


class TestTraining:
    def test_free_theory_converges_quickly(self):
        model = BosonicParams(N=2, lam=0.0, cutoff=2)
        ansatz = AutoregressiveAnsatz.create(_DIM, alpha=1, seed=9)
        cfg = TrainConfig(learning_rate=0.05, batch_size=256, steps=150,
                          seed=1)
        history = train(ansatz, model, cfg)
        assert history[-1][1] == pytest.approx(3.0, abs=0.05)

    def test_history_and_csv(self, tmp_path):
        model = BosonicParams(N=2, lam=0.0, cutoff=2)
        ansatz = AutoregressiveAnsatz.create(_DIM, seed=10)
        cfg = TrainConfig(learning_rate=0.02, batch_size=64, steps=10,
                          seed=2)
        history = train(ansatz, model, cfg, casimir_every=5)
        assert len(history) == 10
        out = tmp_path / "history.csv"
        write_history_csv(history, out)
        assert len(out.read_text().splitlines()) == 11

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.0, batch_size=64, steps=1)
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.1, batch_size=4, steps=1)


class TestGroupSampling:
    def test_haar_matrices_special_unitary(self, rng):
        for n in (2, 3):
            for _ in range(10):
                u = haar_su_n(n, rng)
                np.testing.assert_allclose(u @ u.conj().T, np.eye(n),
                                           atol=1e-12)
                assert np.linalg.det(u) == pytest.approx(1.0, abs=1e-12)

    def test_singlet_expectation_of_invariant_observable(self, rng):
        # for a gauge-invariant observable the projector reweighting must
        # agree with the plain average within Monte Carlo error
        model = BosonicParams(N=2, lam=0.0, cutoff=2)
        ansatz = _free_exact_ansatz()

        def radius_sq(xs):
            return np.sum(xs * xs, axis=1)

        proj = singlet_expectation(ansatz, model, radius_sq, 20_000, seed=3)
        xs = sample(ansatz, 20_000, np.random.default_rng(4))
        plain = radius_sq(xs).mean()
        assert proj == pytest.approx(plain, rel=0.05)


class TestPersistence:
    def test_save_load_round_trip(self, tmp_path, rng):
        ansatz = AutoregressiveAnsatz.create(_DIM, alpha=2, seed=11)
        path = tmp_path / "ansatz.npz"
        save_ansatz(ansatz, path)
        loaded = load_ansatz(path)
        assert loaded.dim == ansatz.dim
        assert loaded.alpha == ansatz.alpha
        x = rng.standard_normal((5, _DIM))
        np.testing.assert_allclose(log_density(loaded, x),
                                   log_density(ansatz, x), atol=1e-12)
