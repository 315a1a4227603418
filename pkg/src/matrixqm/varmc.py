"""Variational Monte Carlo with an autoregressive Gaussian ansatz.

The bosonic SU(N) model in coordinates x_{I,alpha} (flavor I, color
alpha, D = d (N^2 - 1) coordinates total) has the Schroedinger
Hamiltonian H = -1/2 Laplacian + V with

    V(x) = (m^2/2) sum x^2
           + (g^2/4) sum_{gamma,I,J} (sum_{ab} f_{ab gamma} x_{Ia} x_{Jb})^2

The trial state is |psi| = sqrt(p) where p is an autoregressive product
of Gaussians: coordinate x_i is conditioned on x_{<i} through a small
fully-connected network (three affine layers with tanh activations)
that outputs the Gaussian's location and log-scale.  Sampling is
ancestral; energies are Monte Carlo averages of the local energy

    eps(x) = -1/2 sum_i [ d^2_i log|psi| + (d_i log|psi|)^2 ] + V(x)

with exact derivatives via automatic differentiation.  Training is
plain stochastic gradient descent with optional gradient-norm clipping,
optionally penalized by c <G^2> to favor gauge singlets.

Two gradient estimators are provided: ``energy_and_grad`` uses the
pathwise (reparameterization) derivative, which matches
common-random-number finite differences deterministically;
``score_gradient`` is the score-function form with a baseline,
unbiased but noisier.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

os.environ.setdefault("JAX_ENABLE_X64", "true")

import jax
import jax.numpy as jnp
import numpy as np

jax.config.update("jax_enable_x64", True)

from .errors import (DegenerateDenominator, Diverged, NonFiniteOutput)
from .models import BosonicParams
from .operators import structure_constants

__all__ = ["AutoregressiveAnsatz", "TrainConfig", "sample", "log_density",
           "local_energy", "energy_and_grad", "score_gradient", "train",
           "singlet_expectation", "gauge_casimir_estimate", "haar_su_n",
           "save_ansatz", "load_ansatz", "write_history_csv"]


# ---------------------------------------------------------------------------
# ansatz

@dataclass
class AutoregressiveAnsatz:
    """Per-coordinate Gaussian conditioners over a fixed ordering.

    Coordinate 0 has trainable (location, log-scale) constants; each
    later coordinate i has its own three-layer network mapping x_{<i}
    to that pair.  ``alpha`` sets the hidden width alpha * D.  The
    output layers start at zero, so the initial density is the unit
    Gaussian regardless of the hidden-layer initialization.
    """

    dim: int
    alpha: int = 1
    params: list = field(default_factory=list)

    @staticmethod
    def create(dim: int, alpha: int = 1, seed: int = 0,
               init_scale: float = 0.05) -> "AutoregressiveAnsatz":
        rng = np.random.default_rng(seed)
        hidden = max(alpha * dim, 2)
        params: list = [{"out_b": jnp.zeros(2)}]
        for i in range(1, dim):
            layers = {}
            width_in = i
            for layer in range(2):
                layers[f"w{layer}"] = jnp.asarray(
                    rng.normal(scale=init_scale, size=(width_in, hidden)))
                layers[f"b{layer}"] = jnp.zeros(hidden)
                width_in = hidden
            layers["out_w"] = jnp.zeros((hidden, 2))
            layers["out_b"] = jnp.zeros(2)
            params.append(layers)
        return AutoregressiveAnsatz(dim=dim, alpha=alpha, params=params)


def _conditioner(layer_params: dict, x_prev: jnp.ndarray) -> jnp.ndarray:
    """(location, log-scale) of one conditional Gaussian."""
    if "w0" not in layer_params:       # coordinate 0: constants
        return layer_params["out_b"]
    h = x_prev
    for layer in range(2):
        h = jnp.tanh(h @ layer_params[f"w{layer}"]
                     + layer_params[f"b{layer}"])
    return h @ layer_params["out_w"] + layer_params["out_b"]


def _log_density(params: list, x: jnp.ndarray) -> jnp.ndarray:
    total = 0.0
    for i, layer in enumerate(params):
        loc, log_s = _conditioner(layer, x[:i])
        total = total + (-0.5 * jnp.log(2.0 * jnp.pi) - log_s
                         - 0.5 * ((x[i] - loc) / jnp.exp(log_s)) ** 2)
    return total


def _sample_from_noise(params: list, noise: jnp.ndarray) -> jnp.ndarray:
    """Differentiable ancestral transform of standard-normal noise."""
    dim = noise.shape[-1]
    x = jnp.zeros_like(noise)
    for i in range(dim):
        loc, log_s = _conditioner(params[i], x[:i])
        x = x.at[i].set(loc + jnp.exp(log_s) * noise[i])
    return x


_sample_batch = jax.jit(jax.vmap(_sample_from_noise, in_axes=(None, 0)))
_log_density_batch = jax.jit(jax.vmap(_log_density, in_axes=(None, 0)))


def log_density(ansatz: AutoregressiveAnsatz, x: np.ndarray) -> np.ndarray:
    """log p_theta, one value per row of ``x``."""
    x = jnp.atleast_2d(jnp.asarray(x, dtype=jnp.float64))
    out = _log_density_batch(ansatz.params, x)
    if not bool(jnp.all(jnp.isfinite(out))):
        raise NonFiniteOutput("log-density overflow")
    return np.asarray(out)


def sample(ansatz: AutoregressiveAnsatz, n: int,
           rng: np.random.Generator) -> np.ndarray:
    """Ancestral samples from p_theta, shape (n, D)."""
    if n < 1:
        raise ValueError("need n >= 1")
    noise = jnp.asarray(rng.normal(size=(n, ansatz.dim)))
    return np.asarray(_sample_batch(ansatz.params, noise))


# ---------------------------------------------------------------------------
# local energy

def _potential_factory(model: BosonicParams) -> Callable:
    sc = structure_constants(model.N)
    n_gen = sc.n_colors
    f = jnp.asarray(sc.f)
    m2 = model.m2
    g2 = model.g2
    d = model.d

    def potential(x: jnp.ndarray) -> jnp.ndarray:
        xm = x.reshape(d, n_gen)
        quad = 0.5 * m2 * jnp.sum(xm ** 2)
        # t[I, J, gamma] = f_{a b gamma} x_{I a} x_{J b}; the sum runs
        # over all ordered flavor pairs, matching the operator build
        t = jnp.einsum("abg,ia,jb->ijg", f, xm, xm)
        quart = 0.25 * g2 * jnp.sum(t ** 2)
        return quad + quart

    return potential


def _local_energy_fn(model: BosonicParams) -> Callable:
    potential = _potential_factory(model)

    def eps(params: list, x: jnp.ndarray) -> jnp.ndarray:
        def log_psi(y):
            return 0.5 * _log_density(params, y)

        grad = jax.grad(log_psi)(x)
        eye = jnp.eye(x.shape[0])

        def diag_second(i):
            return jax.jvp(jax.grad(log_psi), (x,), (eye[i],))[1][i]

        lap = jnp.sum(jax.vmap(diag_second)(jnp.arange(x.shape[0])))
        return -0.5 * (lap + jnp.sum(grad ** 2)) + potential(x)

    return eps


_EPS_CACHE: dict = {}


def _eps_batch(model: BosonicParams):
    key = (model.N, model.lam, model.m2, model.d)
    if key not in _EPS_CACHE:
        _EPS_CACHE[key] = jax.jit(
            jax.vmap(_local_energy_fn(model), in_axes=(None, 0)))
    return _EPS_CACHE[key]


def local_energy(ansatz: AutoregressiveAnsatz, x: np.ndarray,
                 model: BosonicParams) -> np.ndarray:
    """Local energy eps(x) for each sample row."""
    x = jnp.atleast_2d(jnp.asarray(x, dtype=jnp.float64))
    out = _eps_batch(model)(ansatz.params, x)
    if not bool(jnp.all(jnp.isfinite(out))):
        raise NonFiniteOutput("local energy not finite")
    return np.asarray(out)


# ---------------------------------------------------------------------------
# gauge diagnostics

def _casimir_fn(model: BosonicParams) -> Callable:
    sc = structure_constants(model.N)
    f = jnp.asarray(sc.f) / jnp.sqrt(2.0)
    n_gen = sc.n_colors
    d = model.d

    def casimir(params: list, x: jnp.ndarray) -> jnp.ndarray:
        def log_psi(y):
            return 0.5 * _log_density(params, y)

        grad = jax.grad(log_psi)(x).reshape(d, n_gen)
        xm = x.reshape(d, n_gen)
        # (G_a psi)/psi = sum_{I,b,c} f_{a b c} x_{I b} d_{I c} log|psi|
        g = jnp.einsum("abc,ib,ic->a", f, xm, grad)
        return jnp.sum(g ** 2)

    return casimir


_CAS_CACHE: dict = {}


def _casimir_batch(model: BosonicParams):
    key = (model.N, model.d)
    if key not in _CAS_CACHE:
        _CAS_CACHE[key] = jax.jit(
            jax.vmap(_casimir_fn(model), in_axes=(None, 0)))
    return _CAS_CACHE[key]


def gauge_casimir_estimate(ansatz: AutoregressiveAnsatz,
                           model: BosonicParams,
                           batch: np.ndarray) -> float:
    """Monte Carlo estimate of <sum_a G_a^2> on the sampled batch."""
    x = jnp.atleast_2d(jnp.asarray(batch, dtype=jnp.float64))
    return float(jnp.mean(_casimir_batch(model)(ansatz.params, x)))


# ---------------------------------------------------------------------------
# gradients

def _objective_fn(model: BosonicParams, penalty: float) -> Callable:
    eps_single = _local_energy_fn(model)
    casimir_single = _casimir_fn(model)

    def objective(params: list, noise: jnp.ndarray) -> jnp.ndarray:
        xs = jax.vmap(_sample_from_noise, in_axes=(None, 0))(params, noise)
        e = jnp.mean(jax.vmap(eps_single, in_axes=(None, 0))(params, xs))
        if penalty > 0.0:
            e = e + penalty * jnp.mean(
                jax.vmap(casimir_single, in_axes=(None, 0))(params, xs))
        return e

    return objective


_OBJ_CACHE: dict = {}


def _objective_value_grad(model: BosonicParams, penalty: float):
    key = (model.N, model.lam, model.m2, model.d, penalty)
    if key not in _OBJ_CACHE:
        _OBJ_CACHE[key] = jax.jit(
            jax.value_and_grad(_objective_fn(model, penalty)))
    return _OBJ_CACHE[key]


def energy_and_grad(ansatz: AutoregressiveAnsatz, noise: np.ndarray,
                    model: BosonicParams, penalty: float = 0.0
                    ) -> tuple[float, list]:
    """Batch objective and its pathwise parameter gradient.

    ``noise`` is the standard-normal batch that generates the samples
    (fixed noise makes the estimator a deterministic function of theta,
    so it matches common-random-number finite differences).
    """
    noise = jnp.asarray(noise, dtype=jnp.float64)
    value, grad = _objective_value_grad(model, penalty)(ansatz.params,
                                                        noise)
    if not np.isfinite(float(value)):
        raise NonFiniteOutput("objective not finite")
    return float(value), grad


def score_gradient(ansatz: AutoregressiveAnsatz, batch: np.ndarray,
                   model: BosonicParams) -> tuple[float, list]:
    """Score-function gradient with baseline.

    grad = mean[(eps - mean eps) * grad_theta log p_theta]
         + mean[grad_theta eps]  (at fixed samples),
    an unbiased estimator of grad_theta E.
    """
    x = jnp.atleast_2d(jnp.asarray(batch, dtype=jnp.float64))
    eps_single = _local_energy_fn(model)
    eps_vals = jax.vmap(eps_single, in_axes=(None, 0))(ansatz.params, x)
    e_bar = jnp.mean(eps_vals)
    centered = eps_vals - e_bar

    def weighted_logp(params):
        logp = jax.vmap(_log_density, in_axes=(None, 0))(params, x)
        return jnp.mean(jax.lax.stop_gradient(centered) * logp)

    def mean_eps(params):
        return jnp.mean(jax.vmap(eps_single, in_axes=(None, 0))(params, x))

    g1 = jax.grad(weighted_logp)(ansatz.params)
    g2 = jax.grad(mean_eps)(ansatz.params)
    grad = jax.tree_util.tree_map(lambda a, b: a + b, g1, g2)
    return float(e_bar), grad


# ---------------------------------------------------------------------------
# training

@dataclass(frozen=True)
class TrainConfig:
    """Plain-SGD training schedule."""

    learning_rate: float
    batch_size: int
    steps: int
    penalty: float = 0.0
    seed: int = 0
    clip_norm: float | None = 10.0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0.0:
            raise ValueError("learning rate must be positive")
        if self.batch_size < 16:
            raise ValueError("batch size must be >= 16")


def train(ansatz: AutoregressiveAnsatz, model: BosonicParams,
          config: TrainConfig,
          casimir_every: int = 0) -> list[tuple[int, float, float, float]]:
    """SGD minimization of the batch energy; returns the history.

    History rows are (step, energy, stderr, casimir); the Casimir
    column is NaN except every ``casimir_every`` steps (0: never).
    Raises :class:`Diverged` if the energy stays above ten times its
    initial value for 100 consecutive steps.
    """
    rng = np.random.default_rng(config.seed)
    value_grad = _objective_value_grad(model, config.penalty)
    eps_batch = _eps_batch(model)
    history: list[tuple[int, float, float, float]] = []
    e_init = None
    bad_streak = 0
    for step in range(config.steps):
        noise = jnp.asarray(rng.normal(size=(config.batch_size,
                                             ansatz.dim)))
        value, grad = value_grad(ansatz.params, noise)
        value = float(value)
        if not np.isfinite(value):
            raise NonFiniteOutput("objective is not finite")
        if e_init is None:
            e_init = value
        bad_streak = bad_streak + 1 if value > 10.0 * abs(e_init) else 0
        if bad_streak >= 100:
            raise Diverged(
                f"energy {value} above 10x initial for 100 steps")
        if config.clip_norm is not None:
            leaves = jax.tree_util.tree_leaves(grad)
            norm = float(jnp.sqrt(sum(jnp.sum(g ** 2) for g in leaves)))
            if norm > config.clip_norm:
                grad = jax.tree_util.tree_map(
                    lambda g: g * (config.clip_norm / norm), grad)
        ansatz.params = jax.tree_util.tree_map(
            lambda p, g: p - config.learning_rate * g, ansatz.params, grad)
        xs = _sample_batch(ansatz.params, noise)
        eps_vals = eps_batch(ansatz.params, xs)
        stderr = float(jnp.std(eps_vals) / np.sqrt(config.batch_size))
        cas = float("nan")
        if casimir_every and step % casimir_every == 0:
            cas = gauge_casimir_estimate(ansatz, model, np.asarray(xs))
        history.append((step, value, stderr, cas))
    return history


# ---------------------------------------------------------------------------
# singlet projection

def haar_su_n(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random SU(N) matrix (QR of a Ginibre matrix, det fixed)."""
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    q, r = np.linalg.qr(z)
    q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    return q / np.linalg.det(q) ** (1.0 / n)


def _adjoint_rotation(u: np.ndarray, n_colors: int) -> np.ndarray:
    """Orthogonal matrix R with U tau_a U^+ = sum_b R_ba tau_b."""
    tau = structure_constants(n_colors).generators
    rotated = u @ tau @ u.conj().T
    return np.real(np.einsum("aij,bji->ba", rotated, tau))


def singlet_expectation(ansatz: AutoregressiveAnsatz,
                        model: BosonicParams,
                        observable: Callable[[np.ndarray], np.ndarray],
                        n_samples: int, seed: int = 0) -> float:
    """Gauge-projected expectation <psi|P O|psi> / <psi|P|psi>.

    One Haar-random SU(N) rotation per sample; the projector enters
    through the reweighting psi(U X U^+)/psi(X).
    """
    rng = np.random.default_rng(seed)
    xs = sample(ansatz, n_samples, rng)
    n_gen = model.N ** 2 - 1
    rotated = np.empty_like(xs)
    for k in range(n_samples):
        r = _adjoint_rotation(haar_su_n(model.N, rng),
                              model.N)
        rotated[k] = (xs[k].reshape(model.d, n_gen) @ r.T).reshape(-1)
    log_ratio = 0.5 * (log_density(ansatz, rotated)
                       - log_density(ansatz, xs))
    weights = np.exp(log_ratio)
    obs = np.asarray(observable(xs), dtype=float)
    denom = float(weights.mean())
    denom_err = float(weights.std(ddof=1) / np.sqrt(n_samples))
    if abs(denom) < 2.0 * denom_err:
        raise DegenerateDenominator(
            f"projector norm {denom} +- {denom_err}")
    return float((weights * obs).mean() / denom)


# ---------------------------------------------------------------------------
# persistence

_CKPT_VERSION = 1


def save_ansatz(ansatz: AutoregressiveAnsatz, path: str) -> None:
    arrays = {"version": np.int64(_CKPT_VERSION),
              "dim": np.int64(ansatz.dim),
              "alpha": np.int64(ansatz.alpha)}
    for i, layer in enumerate(ansatz.params):
        for name, arr in layer.items():
            arrays[f"p{i}_{name}"] = np.asarray(arr)
    np.savez(path, **arrays)


def load_ansatz(path: str) -> AutoregressiveAnsatz:
    with np.load(path) as data:
        if int(data["version"]) != _CKPT_VERSION:
            raise ValueError("unsupported checkpoint version")
        dim = int(data["dim"])
        params: list = []
        for i in range(dim):
            layer = {}
            prefix = f"p{i}_"
            for key in data.files:
                if key.startswith(prefix):
                    layer[key[len(prefix):]] = jnp.asarray(data[key])
            params.append(layer)
        return AutoregressiveAnsatz(dim=dim, alpha=int(data["alpha"]),
                                    params=params)


def write_history_csv(history: Sequence[tuple[int, float, float, float]],
                      path: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("step,energy,stderr,casimir\n")
        for step, e, err, cas in history:
            fh.write(f"{step},{e:.9g},{err:.9g},{cas:.9g}\n")
