"""Vectorized numpy reference kernels for the lattice Monte Carlo.

Site fields ``X`` have shape (n_t, d, N, N) (traceless Hermitian) and
links ``U`` shape (n_t, N, N) (special unitary; identity when the model
is ungauged).  All functions are pure.  These implementations are the
correctness reference; :mod:`matrixqm._kernels_numba` provides jitted
loop versions with identical signatures and outputs.

Conventions (S is the tree-level improved action):

    (D_t X)_t = (1/a) [ -1/2 W_t X_{t+2} W_t^+ + 2 U_t X_{t+1} U_t^+
                        - 3/2 X_t ],          W_t = U_t U_{t+1}
    S = N a sum_t Tr[ 1/2 (D_t X)^2 + (m^2/2) X^2
                      - (lam/4) [X_I, X_J]^2 ]   (flavor sums implicit)

``force_x`` returns -dS/dX (traceless Hermitian) and ``force_u`` the
anti-Hermitian traceless Lie-algebra force F_U such that for
U(s) = exp(s H) U with anti-Hermitian H, dS/ds = Re Tr(-F_U^+ H).
"""

from __future__ import annotations

import numpy as np

__all__ = ["project_traceless_hermitian", "kinetic_stencil", "action",
           "force_x", "force_u", "virial_energy_density", "group_exp_mul"]


def _dag(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def project_traceless_hermitian(m: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto traceless Hermitian matrices."""
    n = m.shape[-1]
    h = 0.5 * (m + _dag(m))
    tr = np.trace(h, axis1=-2, axis2=-1) / n
    return h - tr[..., None, None] * np.eye(n)


def kinetic_stencil(X: np.ndarray, U: np.ndarray, a: float) -> np.ndarray:
    """Improved covariant derivative (D_t X) at every site and flavor."""
    W = U @ np.roll(U, -1, axis=0)
    Ud = _dag(U)
    Wd = _dag(W)
    x1 = np.roll(X, -1, axis=0)
    x2 = np.roll(X, -2, axis=0)
    transported1 = U[:, None] @ x1 @ Ud[:, None]
    transported2 = W[:, None] @ x2 @ Wd[:, None]
    return (-0.5 * transported2 + 2.0 * transported1 - 1.5 * X) / a


def _commutators(X: np.ndarray) -> list[tuple[int, int, np.ndarray]]:
    d = X.shape[1]
    out = []
    for i in range(d):
        for j in range(i + 1, d):
            out.append((i, j, X[:, i] @ X[:, j] - X[:, j] @ X[:, i]))
    return out


def action(X: np.ndarray, U: np.ndarray, a: float, n_colors: int,
           m2: float, lam: float) -> float:
    """Tree-level improved lattice action (real number)."""
    k = kinetic_stencil(X, U, a)
    s = 0.5 * np.einsum("tiab,tiba->", k, k)
    s += 0.5 * m2 * np.einsum("tiab,tiba->", X, X)
    for _, _, c in _commutators(X):
        # both orderings of (I, J) contribute equally
        s -= 0.5 * lam * np.einsum("tab,tba->", c, c)
    return float(np.real(n_colors * a * s))


def force_x(X: np.ndarray, U: np.ndarray, a: float, n_colors: int,
            m2: float, lam: float) -> np.ndarray:
    """-dS/dX, traceless Hermitian, shape of X."""
    k = kinetic_stencil(X, U, a)
    W = U @ np.roll(U, -1, axis=0)
    u_prev = np.roll(U, 1, axis=0)
    k_prev = np.roll(k, 1, axis=0)
    w_prev2 = np.roll(W, 2, axis=0)
    k_prev2 = np.roll(k, 2, axis=0)
    grad = (-1.5 * k
            + 2.0 * (_dag(u_prev)[:, None] @ k_prev @ u_prev[:, None])
            - 0.5 * (_dag(w_prev2)[:, None] @ k_prev2 @ w_prev2[:, None]))
    # N a Tr(K dK/dX): the 1/a in dK/dX cancels the measure factor a
    grad = n_colors * grad + (n_colors * a) * m2 * X
    d = X.shape[1]
    for i, j, c in _commutators(X):
        # dS/dX_i += N a lam [X_j, [X_j, X_i]] and (i<->j) with c -> -c
        grad[:, i] += (n_colors * a) * lam * (X[:, j] @ (-c) - (-c) @ X[:, j])
        grad[:, j] += (n_colors * a) * lam * (X[:, i] @ c - c @ X[:, i])
    return project_traceless_hermitian(-grad)


def force_u(X: np.ndarray, U: np.ndarray, a: float,
            n_colors: int) -> np.ndarray:
    """Anti-Hermitian traceless link force (zero flavor-potential part)."""
    k = kinetic_stencil(X, U, a)
    W = U @ np.roll(U, -1, axis=0)
    Ud = _dag(U)
    Wd = _dag(W)
    x1 = np.roll(X, -1, axis=0)
    x2 = np.roll(X, -2, axis=0)
    a_term = 2.0 * (U[:, None] @ x1 @ Ud[:, None])
    b_term = -0.5 * (W[:, None] @ x2 @ Wd[:, None])
    c_term = -0.25 * a_term
    u_prev = np.roll(U, 1, axis=0)
    m_term = _dag(u_prev)[:, None] @ np.roll(k, 1, axis=0) @ u_prev[:, None]

    def comm(p, q):
        return p @ q - q @ p

    g = comm(a_term + b_term, k) + comm(c_term, m_term)
    g = 1j * n_colors * g.sum(axis=1)
    # g is Hermitian; the Lie-algebra force is -i g (anti-Hermitian)
    f = -1j * g
    f = 0.5 * (f - _dag(f))
    n = f.shape[-1]
    tr = np.trace(f, axis1=-2, axis2=-1) / n
    return f - tr[..., None, None] * np.eye(n)


def virial_energy_density(X: np.ndarray, n_colors: int, m2: float,
                          lam: float) -> float:
    """E = (N/n_t) sum_t Tr( m^2 X^2 - (3 lam/2) [X_1, X_2]^2 ... )."""
    n_t = X.shape[0]
    e = m2 * np.einsum("tiab,tiba->", X, X)
    for _, _, c in _commutators(X):
        e -= 1.5 * lam * np.einsum("tab,tba->", c, c)
    return float(np.real(n_colors * e / n_t))


def group_exp_mul(P: np.ndarray, U: np.ndarray, scale: float) -> np.ndarray:
    """exp(scale * P) @ U for anti-Hermitian traceless P, exactly unitary.

    Uses the closed form for 2x2 and a unitary eigendecomposition
    otherwise, so the result stays on the group manifold to roundoff.
    """
    n = U.shape[-1]
    h = (-1j * scale) * P  # Hermitian
    if n == 2:
        r = np.sqrt(np.maximum(
            0.5 * np.real(np.einsum("tab,tba->t", h, h)), 1e-300))
        sinc = np.sin(r) / r
        expo = (np.cos(r)[:, None, None] * np.eye(2)
                + 1j * sinc[:, None, None] * h)
    else:
        vals, vecs = np.linalg.eigh(h)
        phases = np.exp(1j * vals)
        expo = (vecs * phases[:, None, :]) @ _dag(vecs)
    return expo @ U
