"""Euclidean-lattice Hybrid Monte Carlo for the bosonic matrix model.

The model lives on a periodic time lattice of ``n_t`` sites with spacing
``a = 1/(T n_t)``: ``d`` traceless-Hermitian N x N site fields X and,
when gauged, one SU(N) link per site.  The tree-level improved action,
its analytic forces and the virial energy estimator live in the kernel
modules (:mod:`matrixqm._kernels_numba` jitted loops by default,
:mod:`matrixqm._kernels_numpy` vectorized fallback; set the environment
variable ``MATRIXQM_NO_NUMBA`` to force the fallback).

Sampling is standard HMC: Gaussian momenta, leapfrog with multiplicative
exponential-map link updates, Metropolis accept/reject.  Chains report
the virial energy with a Madras--Sokal integrated autocorrelation time.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (IntegratorDiverged, InvariantViolation,
                     NoMeasurements, SeriesTooShort)
from .operators import structure_constants


def _select_kernels():
    if os.environ.get("MATRIXQM_NO_NUMBA"):
        from . import _kernels_numpy as impl
        return impl, "numpy"
    try:
        from . import _kernels_numba as impl
        return impl, "numba"
    except ImportError:
        from . import _kernels_numpy as impl
        return impl, "numpy"


_K, KERNEL_BACKEND = _select_kernels()

__all__ = ["LatticeParams", "LatticeState", "ObservableSeries",
           "Schedule", "action", "forces", "virial_energy",
           "hmc_trajectory", "run_chain", "integrated_autocorrelation",
           "random_gauge_transform", "write_chain_csv", "write_manifest",
           "save_checkpoint", "load_checkpoint", "KERNEL_BACKEND"]

_DH_DIVERGENCE = 1e3


@dataclass(frozen=True)
class LatticeParams:
    """Lattice discretization of the bosonic SU(N) model at temperature T."""

    n_colors: int
    lam: float
    temperature: float
    n_t: int
    m2: float = 1.0
    d: int = 2
    gauged: bool = True

    def __post_init__(self) -> None:
        if self.n_t < 4:
            raise ValueError("need n_t >= 4 for the improved stencil")
        if self.temperature <= 0.0:
            raise ValueError("temperature must be positive")

    @property
    def a(self) -> float:
        """Lattice spacing a = 1/(T n_t) (so a n_t = 1/T = beta)."""
        return 1.0 / (self.temperature * self.n_t)


@dataclass
class LatticeState:
    """Site fields X (n_t, d, N, N) and links U (n_t, N, N)."""

    X: np.ndarray
    U: np.ndarray

    @staticmethod
    def cold(p: LatticeParams) -> "LatticeState":
        n = p.n_colors
        X = np.zeros((p.n_t, p.d, n, n), dtype=complex)
        U = np.broadcast_to(np.eye(n, dtype=complex),
                            (p.n_t, n, n)).copy()
        return LatticeState(X, U)

    @staticmethod
    def hot(p: LatticeParams, rng: np.random.Generator,
            scale: float = 0.5) -> "LatticeState":
        n = p.n_colors
        X = scale * (rng.normal(size=(p.n_t, p.d, n, n))
                     + 1j * rng.normal(size=(p.n_t, p.d, n, n)))
        X = _K.project_traceless_hermitian(X)
        U = np.broadcast_to(np.eye(n, dtype=complex),
                            (p.n_t, n, n)).copy()
        return LatticeState(X, np.ascontiguousarray(U))

    def check(self) -> None:
        n = self.X.shape[-1]
        dag = np.conj(np.swapaxes(self.X, -1, -2))
        if np.max(np.abs(self.X - dag)) > 1e-12:
            raise InvariantViolation("site fields not Hermitian")
        if np.max(np.abs(np.trace(self.X, axis1=-2, axis2=-1))) > 1e-12:
            raise InvariantViolation("site fields not traceless")
        udag = np.conj(np.swapaxes(self.U, -1, -2))
        if np.max(np.abs(self.U @ udag - np.eye(n))) > 1e-10:
            raise InvariantViolation("links not unitary")
        if np.max(np.abs(np.linalg.det(self.U) - 1.0)) > 1e-10:
            raise InvariantViolation("links not special unitary")

    def reproject(self) -> None:
        """Push roundoff drift back onto the constraint manifolds."""
        self.X = _K.project_traceless_hermitian(self.X)
        # polar decomposition per link, then fix the determinant phase
        w, _, vh = np.linalg.svd(self.U)
        u = w @ vh
        n = u.shape[-1]
        phase = np.linalg.det(u) ** (1.0 / n)
        self.U = u / phase[:, None, None]


@dataclass
class ObservableSeries:
    """Thinned chain observable with autocorrelation-aware error."""

    values: np.ndarray
    stride: float                 # MDTU between saved values
    tau_int: float
    error: float
    acceptance: float = float("nan")
    mean_exp_minus_dh: float = float("nan")
    exp_minus_dh_err: float = float("nan")

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))


@dataclass(frozen=True)
class Schedule:
    """Chain layout in molecular-dynamics time units (MDTU)."""

    n_mdtu: float
    burn_in: float = 1000.0
    save_stride: float = 10.0
    traj_length: float = 1.0
    step_size: float | None = None   # None: auto-tune during burn-in

    def __post_init__(self) -> None:
        if self.n_mdtu <= 0 or self.save_stride <= 0 or self.traj_length <= 0:
            raise ValueError("schedule durations must be positive")


def _basis(n: int) -> np.ndarray:
    return structure_constants(n).generators


def _gaussian_momenta(p: LatticeParams, rng: np.random.Generator
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Traceless-Hermitian X momenta and anti-Hermitian link momenta."""
    tau = _basis(p.n_colors)
    n_gen = tau.shape[0]
    coeff = rng.normal(size=(p.n_t, p.d, n_gen))
    px = np.einsum("tig,gab->tiab", coeff, tau)
    if p.gauged:
        coeff_u = rng.normal(size=(p.n_t, n_gen))
        pu = 1j * np.einsum("tg,gab->tab", coeff_u, tau)
    else:
        pu = np.zeros_like(px[:, 0])
    return px, pu


def action(s: LatticeState, p: LatticeParams) -> float:
    """Tree-level improved action of the configuration."""
    return float(_K.action(s.X, s.U, p.a, p.n_colors, p.m2, p.lam))


def forces(s: LatticeState, p: LatticeParams
           ) -> tuple[np.ndarray, np.ndarray]:
    """(-dS/dX, link force); the link force is zero when ungauged."""
    fx = _K.force_x(s.X, s.U, p.a, p.n_colors, p.m2, p.lam)
    if p.gauged:
        fu = _K.force_u(s.X, s.U, p.a, p.n_colors)
    else:
        fu = np.zeros_like(s.U)
    return fx, fu


def virial_energy(s: LatticeState, p: LatticeParams) -> float:
    """Internal energy from the virial estimator (no derivative terms)."""
    return float(_K.virial_energy_density(s.X, p.n_colors, p.m2, p.lam))


def _leapfrog(X: np.ndarray, U: np.ndarray, px: np.ndarray,
              pu: np.ndarray, p: LatticeParams, eps: float,
              n_steps: int) -> tuple[np.ndarray, np.ndarray,
                                     np.ndarray, np.ndarray]:
    fx = _K.force_x(X, U, p.a, p.n_colors, p.m2, p.lam)
    fu = (_K.force_u(X, U, p.a, p.n_colors) if p.gauged
          else np.zeros_like(pu))
    px = px + 0.5 * eps * fx
    pu = pu + 0.5 * eps * fu
    for step in range(n_steps):
        X = X + eps * px
        if p.gauged:
            U = _K.group_exp_mul(pu, U, eps)
        fx = _K.force_x(X, U, p.a, p.n_colors, p.m2, p.lam)
        if p.gauged:
            fu = _K.force_u(X, U, p.a, p.n_colors)
        weight = eps if step == n_steps - 1 else 2.0 * eps
        px = px + 0.5 * weight * fx
        pu = pu + 0.5 * weight * fu
    return X, U, px, pu


def _hamiltonian(X, U, px, pu, p: LatticeParams) -> float:
    kin = 0.5 * float(np.real(np.einsum("tiab,tiba->", px, px)))
    if p.gauged:
        kin += 0.5 * float(np.real(np.sum(np.conj(pu) * pu)))
    return kin + float(_K.action(X, U, p.a, p.n_colors, p.m2, p.lam))


def hmc_trajectory(s: LatticeState, p: LatticeParams, step_size: float,
                   n_steps: int, rng: np.random.Generator
                   ) -> tuple[LatticeState, bool, float]:
    """One Metropolis-adjusted leapfrog trajectory; returns (s', accept, dH)."""
    px, pu = _gaussian_momenta(p, rng)
    h0 = _hamiltonian(s.X, s.U, px, pu, p)
    X, U, px, pu = _leapfrog(s.X, s.U, px, pu, p, step_size, n_steps)
    h1 = _hamiltonian(X, U, px, pu, p)
    dh = h1 - h0
    if not np.isfinite(dh) or abs(dh) > _DH_DIVERGENCE:
        raise IntegratorDiverged(
            f"|dH| = {dh} at step size {step_size}")
    accept = bool(np.log(rng.uniform()) < -dh)
    if accept:
        out = LatticeState(X, U)
        out.reproject()
    else:
        out = LatticeState(s.X.copy(), s.U.copy())
    return out, accept, float(dh)


def _steps_for(traj_length: float, eps: float) -> int:
    return max(1, int(round(traj_length / eps)))


def _tune_step_size(s: LatticeState, p: LatticeParams, traj_length: float,
                    rng: np.random.Generator, eps0: float = 0.1,
                    n_rounds: int = 12, n_probe: int = 10) -> float:
    """Crude bisection of eps toward 70-90% acceptance."""
    eps = eps0
    for _ in range(n_rounds):
        n_acc = 0
        for _ in range(n_probe):
            try:
                s, acc, _ = hmc_trajectory(s, p, eps,
                                           _steps_for(traj_length, eps), rng)
            except IntegratorDiverged:
                acc = False
                eps *= 0.5
                continue
            n_acc += acc
        rate = n_acc / n_probe
        if rate < 0.70:
            eps *= 0.7
        elif rate > 0.90:
            eps *= 1.25
        else:
            break
    return eps


def integrated_autocorrelation(values: Sequence[float],
                               window_factor: float = 6.0) -> float:
    """Madras--Sokal tau_int with self-consistent window W >= c tau_int."""
    v = np.asarray(values, dtype=float)
    n = v.size
    if n < 100:
        raise SeriesTooShort(f"need >= 100 points, got {n}")
    centered = v - v.mean()
    var = float(centered @ centered) / n
    if var == 0.0:
        return 0.5
    acf = np.correlate(centered, centered, mode="full")[n - 1:] / (n * var)
    tau = 0.5
    for w in range(1, n // 2):
        tau = 0.5 + float(np.sum(acf[1:w + 1]))
        if w >= window_factor * tau:
            break
    return max(tau, 0.5)


@dataclass
class ChainRecord:
    """Raw per-trajectory log kept alongside the thinned observable."""

    mdtu: list[float] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    accept: list[int] = field(default_factory=list)
    delta_h: list[float] = field(default_factory=list)


def run_chain(p: LatticeParams, schedule: Schedule, seed: int,
              record: ChainRecord | None = None
              ) -> ObservableSeries:
    """Run a seeded HMC chain and return the thinned virial energy series.

    The chain thermalizes for ``schedule.burn_in`` MDTU (tuning the step
    size to the 70-90% acceptance band unless one was given), then saves
    the virial energy every ``schedule.save_stride`` MDTU for
    ``schedule.n_mdtu`` MDTU.  The error bar combines the sample
    variance with the integrated autocorrelation time.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    s = LatticeState.hot(p, rng)
    if schedule.step_size is None:
        eps = _tune_step_size(s, p, schedule.traj_length, rng)
    else:
        eps = schedule.step_size
    n_steps = _steps_for(schedule.traj_length, eps)

    t = 0.0
    while t < schedule.burn_in:
        s, _, _ = hmc_trajectory(s, p, eps, n_steps, rng)
        t += schedule.traj_length

    values = []
    dhs = []
    n_acc = 0
    n_traj = 0
    t = 0.0
    next_save = 0.0
    while t < schedule.n_mdtu:
        s, acc, dh = hmc_trajectory(s, p, eps, n_steps, rng)
        t += schedule.traj_length
        n_acc += acc
        n_traj += 1
        dhs.append(dh)
        if t >= next_save:
            e = virial_energy(s, p)
            values.append(e)
            if record is not None:
                record.mdtu.append(t)
                record.energy.append(e)
                record.accept.append(int(acc))
                record.delta_h.append(dh)
            next_save += schedule.save_stride
    if not values:
        raise NoMeasurements("schedule produced no saved configurations")
    values = np.asarray(values)
    try:
        tau = integrated_autocorrelation(values)
    except SeriesTooShort:
        tau = 0.5
    err = float(values.std(ddof=1)
                * np.sqrt(2.0 * tau / values.size)) if values.size > 1 else 0.0
    dhs = np.asarray(dhs)
    w = np.exp(-dhs)
    return ObservableSeries(
        values=values, stride=schedule.save_stride, tau_int=float(tau),
        error=err, acceptance=n_acc / max(n_traj, 1),
        mean_exp_minus_dh=float(w.mean()),
        exp_minus_dh_err=float(w.std(ddof=1) / np.sqrt(w.size))
        if w.size > 1 else float("nan"))


def random_gauge_transform(s: LatticeState, rng: np.random.Generator
                           ) -> LatticeState:
    """Site-dependent SU(N) gauge transformation (for invariance tests)."""
    n = s.X.shape[-1]
    n_t = s.X.shape[0]
    tau = _basis(n)
    coeff = rng.normal(size=(n_t, tau.shape[0]))
    alg = 1j * np.einsum("tg,gab->tab", coeff, tau)
    eye = np.broadcast_to(np.eye(n, dtype=complex), (n_t, n, n)).copy()
    omega = _K.group_exp_mul(alg, eye, 1.0)
    omega_d = np.conj(np.swapaxes(omega, -1, -2))
    X = omega[:, None] @ s.X @ omega_d[:, None]
    U = omega @ s.U @ np.roll(omega_d, -1, axis=0)
    return LatticeState(np.ascontiguousarray(X), np.ascontiguousarray(U))


# ---------------------------------------------------------------------------
# persistence

def write_chain_csv(record: ChainRecord, path: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("mdtu,energy,accept,delta_h\n")
        for row in zip(record.mdtu, record.energy, record.accept,
                       record.delta_h):
            fh.write(f"{row[0]:.9g},{row[1]:.9g},{row[2]},{row[3]:.9g}\n")


def write_manifest(path: str, p: LatticeParams, schedule: Schedule,
                   seed: int, series: ObservableSeries) -> None:
    manifest = {
        "params": dataclasses.asdict(p),
        "schedule": dataclasses.asdict(schedule),
        "seed": seed,
        "kernel_backend": KERNEL_BACKEND,
        "mean_energy": series.mean,
        "error": series.error,
        "tau_int": series.tau_int,
        "acceptance": series.acceptance,
        "mean_exp_minus_dh": series.mean_exp_minus_dh,
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


_CHECKPOINT_VERSION = 1


def save_checkpoint(s: LatticeState, path: str) -> None:
    np.savez(path, version=np.int64(_CHECKPOINT_VERSION), X=s.X, U=s.U)


def load_checkpoint(path: str) -> LatticeState:
    with np.load(path) as data:
        version = int(data["version"])
        if version != _CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        return LatticeState(data["X"].copy(), data["U"].copy())
