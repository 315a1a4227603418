"""Statevector emulation of hardware-efficient variational circuits.

The ansatz is ``depth`` repetitions of (single-qubit rotation layer,
full CNOT entangler) followed by one final rotation layer, acting on
|0...0>.  Rotation layers are either Ry on every qubit (``form="ry"``)
or Ry followed by Rz (``form="ryrz"``).  The entangler applies
CNOT(control=i, target=j) for every pair i < j.

Energies are Rayleigh quotients of a :class:`~matrixqm.qubit_map.PauliSum`
on the circuit state, minimized by either a hand-implemented
Nelder--Mead simplex or a quasi-Newton method with two-point
finite-difference gradients and backtracking line search.  A multi-start
driver aggregates independent seeded restarts.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (MemoryGuard, ObjectiveNotFinite,
                     ParameterCountMismatch)
from .qubit_map import PauliSum, _popcount, _string_masks

__all__ = ["AnsatzSpec", "RunStats", "ansatz_state", "energy",
           "parameter_shift_gradient", "minimize", "multi_start",
           "write_run_record"]

_MAX_QUBITS = 14


@dataclass(frozen=True)
class AnsatzSpec:
    """Hardware-efficient circuit shape: rotation form, depth, qubits."""

    n_qubits: int
    form: str = "ry"          # "ry" | "ryrz"
    depth: int = 1

    def __post_init__(self) -> None:
        if self.form not in ("ry", "ryrz"):
            raise ValueError(f"unknown rotation form {self.form!r}")
        if self.n_qubits > _MAX_QUBITS:
            raise MemoryGuard(
                f"{self.n_qubits} qubits exceeds the statevector limit "
                f"of {_MAX_QUBITS}")
        if self.n_qubits < 1 or self.depth < 0:
            raise ValueError("need n_qubits >= 1 and depth >= 0")

    @property
    def rotations_per_layer(self) -> int:
        return self.n_qubits * (2 if self.form == "ryrz" else 1)

    @property
    def n_parameters(self) -> int:
        return self.rotations_per_layer * (self.depth + 1)


def _apply_single(state: np.ndarray, n_qubits: int, qubit: int,
                  gate: np.ndarray) -> np.ndarray:
    """Apply a 2x2 gate to one qubit (qubit j = index bit 2**j)."""
    axis = n_qubits - 1 - qubit
    tensor = state.reshape((2,) * n_qubits)
    tensor = np.moveaxis(tensor, axis, 0)
    tensor = np.tensordot(gate, tensor, axes=([1], [0]))
    tensor = np.moveaxis(tensor, 0, axis)
    return np.ascontiguousarray(tensor).reshape(-1)


def _apply_cnot(state: np.ndarray, n_qubits: int, control: int,
                target: int) -> np.ndarray:
    tensor = state.reshape((2,) * n_qubits).copy()
    c_axis = n_qubits - 1 - control
    t_axis = n_qubits - 1 - target
    idx1 = [slice(None)] * n_qubits
    idx1[c_axis] = 1
    sub = tensor[tuple(idx1)]
    flip_axis = t_axis - (1 if t_axis > c_axis else 0)
    tensor[tuple(idx1)] = np.flip(sub, axis=flip_axis)
    return tensor.reshape(-1)


@functools.lru_cache(maxsize=8)
def _entangler_permutation(n_qubits: int) -> np.ndarray:
    """Basis-label permutation of one all-to-all CNOT block.

    A CNOT network acts linearly on basis labels (target bit XOR
    control bit), so the whole block collapses to a single index
    permutation; applying it once per layer replaces the gate-by-gate
    loop at identical numerical results.
    """
    labels = np.arange(1 << n_qubits)
    pairs = [(i, j) for i in range(n_qubits)
             for j in range(i + 1, n_qubits)]
    for control, target in reversed(pairs):
        labels = labels ^ (((labels >> control) & 1) << target)
    return labels


def _ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0.0],
                     [0.0, np.exp(0.5j * theta)]], dtype=complex)


def ansatz_state(spec: AnsatzSpec, theta: Sequence[float]) -> np.ndarray:
    """Statevector prepared by the circuit at parameters ``theta``."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.n_parameters,):
        raise ParameterCountMismatch(
            f"got {theta.size} parameters, ansatz needs "
            f"{spec.n_parameters}")
    n = spec.n_qubits
    state = np.zeros(1 << n, dtype=complex)
    state[0] = 1.0
    k = 0

    def rotation_layer(state: np.ndarray, k: int) -> tuple[np.ndarray, int]:
        for q in range(n):
            state = _apply_single(state, n, q, _ry(theta[k]))
            k += 1
            if spec.form == "ryrz":
                state = _apply_single(state, n, q, _rz(theta[k]))
                k += 1
        return state, k

    state, k = rotation_layer(state, k)
    perm = _entangler_permutation(n)
    for _ in range(spec.depth):
        state = state[perm]
        state, k = rotation_layer(state, k)
    return state


@functools.lru_cache(maxsize=8)
def _compiled_matrix(h: PauliSum) -> sp.csr_matrix:
    """Sparse matrix of a Pauli sum (each string is a signed permutation)."""
    dim = 1 << h.n_qubits
    u = np.arange(dim, dtype=np.int64)
    rows, cols, vals = [], [], []
    for coeff, string in h.terms:
        x, z = _string_masks(string)
        n_y = sum(1 for ch in string if ch == "Y")
        signs = 1.0 - 2.0 * (_popcount(u & z) & 1)
        rows.append(u)
        cols.append(u ^ x)
        vals.append(coeff * ((-1j) ** n_y) * signs)
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim)).tocsr()
    mat.sum_duplicates()
    return mat


def energy(h: PauliSum, spec: AnsatzSpec, theta: Sequence[float]) -> float:
    """Rayleigh quotient <psi(theta)|h|psi(theta)> (psi is normalized)."""
    psi = ansatz_state(spec, theta)
    mat = _compiled_matrix(h)
    return float(np.real(np.vdot(psi, mat @ psi)))


def parameter_shift_gradient(h: PauliSum, spec: AnsatzSpec,
                             theta: Sequence[float]) -> np.ndarray:
    """Exact gradient via the +/- pi/2 parameter-shift rule."""
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for k in range(theta.size):
        plus = theta.copy()
        plus[k] += np.pi / 2.0
        minus = theta.copy()
        minus[k] -= np.pi / 2.0
        grad[k] = 0.5 * (energy(h, spec, plus) - energy(h, spec, minus))
    return grad


@dataclass
class RunStats:
    """Aggregate of best energies across independent restarts."""

    min: float
    max: float
    mean: float
    std: float
    best_theta: np.ndarray
    energies: np.ndarray
    traces: list[list[float]] = field(default_factory=list)


def _check_finite(value: float) -> float:
    if not np.isfinite(value):
        raise ObjectiveNotFinite(f"objective returned {value}")
    return float(value)


def _nelder_mead(objective: Callable[[np.ndarray], float],
                 theta0: np.ndarray, max_iters: int) -> tuple[
                     np.ndarray, float, list[float]]:
    """Simplex search with coefficients (1, 2, 0.5, 0.5)."""
    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    ndim = theta0.size
    simplex = [theta0.copy()]
    for k in range(ndim):
        point = theta0.copy()
        point[k] += 0.25 if point[k] == 0.0 else 0.1 * abs(point[k]) + 0.15
        simplex.append(point)
    values = [_check_finite(objective(p)) for p in simplex]
    trace: list[float] = []
    for _ in range(max_iters):
        order = np.argsort(values, kind="stable")
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        trace.append(values[0])
        if abs(values[-1] - values[0]) < 1e-12 * (1.0 + abs(values[0])):
            break
        centroid = np.mean(simplex[:-1], axis=0)
        reflected = centroid + alpha * (centroid - simplex[-1])
        f_r = _check_finite(objective(reflected))
        if values[0] <= f_r < values[-2]:
            simplex[-1], values[-1] = reflected, f_r
        elif f_r < values[0]:
            expanded = centroid + gamma * (reflected - centroid)
            f_e = _check_finite(objective(expanded))
            if f_e < f_r:
                simplex[-1], values[-1] = expanded, f_e
            else:
                simplex[-1], values[-1] = reflected, f_r
        else:
            contracted = centroid + rho * (simplex[-1] - centroid)
            f_c = _check_finite(objective(contracted))
            if f_c < values[-1]:
                simplex[-1], values[-1] = contracted, f_c
            else:
                for k in range(1, len(simplex)):
                    simplex[k] = simplex[0] + sigma * (simplex[k] - simplex[0])
                    values[k] = _check_finite(objective(simplex[k]))
    best = int(np.argmin(values))
    return simplex[best], values[best], trace


def _fd_gradient(objective: Callable[[np.ndarray], float],
                 theta: np.ndarray, f0: float,
                 step: float = 1e-6) -> np.ndarray:
    grad = np.zeros_like(theta)
    for k in range(theta.size):
        shifted = theta.copy()
        shifted[k] += step
        grad[k] = (_check_finite(objective(shifted)) - f0) / step
    return grad


def _quasi_newton_fd(objective: Callable[[np.ndarray], float],
                     theta0: np.ndarray, max_iters: int) -> tuple[
                         np.ndarray, float, list[float]]:
    """BFGS with two-point finite-difference gradients and backtracking."""
    theta = theta0.copy()
    f_val = _check_finite(objective(theta))
    grad = _fd_gradient(objective, theta, f_val)
    h_inv = np.eye(theta.size)
    trace: list[float] = []
    for _ in range(max_iters):
        trace.append(f_val)
        if np.linalg.norm(grad) < 1e-8:
            break
        direction = -h_inv @ grad
        slope = float(grad @ direction)
        if slope >= 0.0:
            h_inv = np.eye(theta.size)
            direction = -grad
            slope = float(grad @ direction)
        step = 1.0
        accepted = False
        for _ in range(40):
            trial = theta + step * direction
            f_trial = _check_finite(objective(trial))
            if f_trial <= f_val + 1e-4 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        grad_new = _fd_gradient(objective, trial, f_trial)
        s = trial - theta
        y = grad_new - grad
        sy = float(s @ y)
        if sy > 1e-12:
            rho = 1.0 / sy
            eye = np.eye(theta.size)
            left = eye - rho * np.outer(s, y)
            h_inv = left @ h_inv @ left.T + rho * np.outer(s, s)
        theta, f_val, grad = trial, f_trial, grad_new
    return theta, f_val, trace


_OPTIMIZERS = {
    "nelder_mead": _nelder_mead,
    "quasi_newton_fd": _quasi_newton_fd,
}


def minimize(objective: Callable[[np.ndarray], float], optimizer: str,
             theta0: Sequence[float], max_iters: int = 10_000
             ) -> tuple[np.ndarray, float, list[float]]:
    """Minimize ``objective`` from ``theta0``; returns (theta*, E*, trace)."""
    if optimizer not in _OPTIMIZERS:
        raise ValueError(f"unknown optimizer {optimizer!r}; choose from "
                         f"{sorted(_OPTIMIZERS)}")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    theta0 = np.asarray(theta0, dtype=float)
    return _OPTIMIZERS[optimizer](objective, theta0, max_iters)


def multi_start(h: PauliSum, spec: AnsatzSpec, optimizer: str,
                n_restarts: int, seed: int,
                max_iters: int = 10_000) -> RunStats:
    """Aggregate ``n_restarts`` seeded minimizations of the circuit energy.

    Initial angles are uniform on [0, 2pi); restart ``r`` uses the child
    seed ``SeedSequence(seed).spawn(n_restarts)[r]`` so runs are
    independent and reproducible.
    """
    if n_restarts < 1:
        raise ValueError("n_restarts must be >= 1")
    children = np.random.SeedSequence(seed).spawn(n_restarts)

    def objective(theta: np.ndarray) -> float:
        return energy(h, spec, theta)

    best_energies = np.empty(n_restarts)
    traces: list[list[float]] = []
    best_theta = None
    for r in range(n_restarts):
        rng = np.random.default_rng(children[r])
        theta0 = rng.uniform(0.0, 2.0 * np.pi, size=spec.n_parameters)
        theta, e_best, trace = minimize(objective, optimizer, theta0,
                                        max_iters)
        best_energies[r] = e_best
        traces.append(trace)
        if best_theta is None or e_best <= best_energies.min():
            best_theta = theta
    return RunStats(min=float(best_energies.min()),
                    max=float(best_energies.max()),
                    mean=float(best_energies.mean()),
                    std=float(best_energies.std()),
                    best_theta=np.asarray(best_theta),
                    energies=best_energies,
                    traces=traces)


def write_run_record(path: str, *, hamiltonian_file: str, spec: AnsatzSpec,
                     optimizer: str, n_restarts: int, max_iters: int,
                     seed: int, stats: RunStats,
                     trace_file: str | None = None) -> None:
    """JSON run record consumed by the command-line interface."""
    record = {
        "hamiltonian_file": hamiltonian_file,
        "form": spec.form,
        "depth": spec.depth,
        "n_qubits": spec.n_qubits,
        "optimizer": optimizer,
        "n_restarts": n_restarts,
        "max_iters": max_iters,
        "seed": seed,
        "min": stats.min,
        "max": stats.max,
        "mean": stats.mean,
        "std": stats.std,
        "trace_file": trace_file,
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(record, fh, indent=2)
        fh.write("\n")
