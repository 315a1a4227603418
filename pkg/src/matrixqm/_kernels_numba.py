"""Jitted loop kernels for the lattice Monte Carlo.

Same signatures and outputs as :mod:`matrixqm._kernels_numpy`; importing
this module raises ImportError when numba is unavailable.  Selection
between the two happens in :mod:`matrixqm.lattice_hmc` (environment
variable ``MATRIXQM_NO_NUMBA`` forces the numpy path).
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["project_traceless_hermitian", "kinetic_stencil", "action",
           "force_x", "force_u", "virial_energy_density", "group_exp_mul"]


@njit(cache=True)
def _project_th_inplace(out):
    n_t, d, n, _ = out.shape
    for t in range(n_t):
        for i in range(d):
            m = out[t, i]
            h = 0.5 * (m + m.conj().T)
            tr = np.trace(h) / n
            for r in range(n):
                h[r, r] -= tr
            out[t, i] = h


def project_traceless_hermitian(m: np.ndarray) -> np.ndarray:
    out = np.array(m, dtype=np.complex128, copy=True)
    if out.ndim == 3:
        work = out.reshape(out.shape[0], 1, out.shape[1], out.shape[2])
        _project_th_inplace(work)
        return work.reshape(out.shape)
    _project_th_inplace(out)
    return out


@njit(cache=True)
def kinetic_stencil(X, U, a):
    n_t, d, n, _ = X.shape
    out = np.empty_like(X)
    for t in range(n_t):
        t1 = (t + 1) % n_t
        t2 = (t + 2) % n_t
        w = np.dot(U[t], U[t1])
        wd = w.conj().T
        ud = U[t].conj().T
        for i in range(d):
            hop1 = np.dot(np.dot(U[t], X[t1, i]), ud)
            hop2 = np.dot(np.dot(w, X[t2, i]), wd)
            out[t, i] = (-0.5 * hop2 + 2.0 * hop1 - 1.5 * X[t, i]) / a
    return out


@njit(cache=True)
def _sq_norm(m):
    total = 0.0
    for r in range(m.shape[0]):
        for c in range(m.shape[1]):
            v = m[r, c]
            total += v.real * v.real + v.imag * v.imag
    return total


@njit(cache=True)
def action(X, U, a, n_colors, m2, lam):
    k = kinetic_stencil(X, U, a)
    n_t, d = X.shape[0], X.shape[1]
    s = 0.0
    for t in range(n_t):
        for i in range(d):
            s += 0.5 * _sq_norm(k[t, i]) + 0.5 * m2 * _sq_norm(X[t, i])
            for j in range(i + 1, d):
                comm = (np.dot(X[t, i], X[t, j])
                        - np.dot(X[t, j], X[t, i]))
                s += 0.5 * lam * _sq_norm(comm)
    return n_colors * a * s


@njit(cache=True)
def force_x(X, U, a, n_colors, m2, lam):
    k = kinetic_stencil(X, U, a)
    n_t, d, n, _ = X.shape
    grad = np.empty_like(X)
    for t in range(n_t):
        tm1 = (t - 1) % n_t
        tm2 = (t - 2) % n_t
        up = U[tm1]
        upd = up.conj().T
        w2 = np.dot(U[tm2], U[(tm2 + 1) % n_t])
        w2d = w2.conj().T
        for i in range(d):
            g = (-1.5 * k[t, i]
                 + 2.0 * np.dot(np.dot(upd, k[tm1, i]), up)
                 - 0.5 * np.dot(np.dot(w2d, k[tm2, i]), w2))
            g = n_colors * g + (n_colors * a * m2) * X[t, i]
            for j in range(d):
                if j == i:
                    continue
                comm = (np.dot(X[t, j], X[t, i])
                        - np.dot(X[t, i], X[t, j]))
                g += (n_colors * a * lam) * (np.dot(X[t, j], comm)
                                             - np.dot(comm, X[t, j]))
            grad[t, i] = -g
    _project_th_inplace(grad)
    return grad


@njit(cache=True)
def force_u(X, U, a, n_colors):
    k = kinetic_stencil(X, U, a)
    n_t, d, n, _ = X.shape
    out = np.zeros((n_t, n, n), dtype=np.complex128)
    for t in range(n_t):
        t1 = (t + 1) % n_t
        t2 = (t + 2) % n_t
        tm1 = (t - 1) % n_t
        w = np.dot(U[t], U[t1])
        wd = w.conj().T
        ud = U[t].conj().T
        upd = U[tm1].conj().T
        g = np.zeros((n, n), dtype=np.complex128)
        for i in range(d):
            a_term = 2.0 * np.dot(np.dot(U[t], X[t1, i]), ud)
            b_term = -0.5 * np.dot(np.dot(w, X[t2, i]), wd)
            c_term = -0.25 * a_term
            m_term = np.dot(np.dot(upd, k[tm1, i]), U[tm1])
            ab = a_term + b_term
            g += np.dot(ab, k[t, i]) - np.dot(k[t, i], ab)
            g += np.dot(c_term, m_term) - np.dot(m_term, c_term)
        f = n_colors * g  # -i * (i N g) for the anti-Hermitian force
        f = 0.5 * (f - f.conj().T)
        tr = np.trace(f) / n
        for r in range(n):
            f[r, r] -= tr
        out[t] = f
    return out


@njit(cache=True)
def virial_energy_density(X, n_colors, m2, lam):
    n_t, d = X.shape[0], X.shape[1]
    e = 0.0
    for t in range(n_t):
        for i in range(d):
            e += m2 * _sq_norm(X[t, i])
            for j in range(i + 1, d):
                comm = (np.dot(X[t, i], X[t, j])
                        - np.dot(X[t, j], X[t, i]))
                e += 1.5 * lam * _sq_norm(comm)
    return n_colors * e / n_t


@njit(cache=True)
def group_exp_mul(P, U, scale):
    n_t, n, _ = U.shape
    out = np.empty_like(U)
    for t in range(n_t):
        h = (-1j * scale) * P[t]  # Hermitian
        if n == 2:
            r2 = 0.5 * _sq_norm(h)
            r = np.sqrt(r2) if r2 > 0.0 else 1e-150
            expo = (np.cos(r) * np.eye(2).astype(np.complex128)
                    + (1j * np.sin(r) / r) * h)
        else:
            vals, vecs = np.linalg.eigh(h)
            expo = np.dot(vecs * np.exp(1j * vals),
                          vecs.conj().T)
        out[t] = np.dot(expo, U[t])
    return out
