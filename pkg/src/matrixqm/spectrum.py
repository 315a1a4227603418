"""Sparse eigensolver, expectation values, and truncation-convergence scans.

The iterative path is ARPACK's implicitly restarted Lanczos
(``scipy.sparse.linalg.eigsh``) applied to either an explicit sparse matrix
or a matrix-free :class:`~matrixqm.models.OperatorFactors`.  An independent
dense oracle (:func:`dense_eigh_oracle`, Householder tridiagonalization plus
implicit-shift QL implemented directly on numpy primitives) cross-checks the
iterative eigenvalues at desk dimensions.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .errors import (DimensionMismatch, MemoryGuard, NoConvergence,
                     NonHermitianInput, NonNegligibleImaginaryPart)
from .models import (BosonicParams, Deformation, MiniBMNParams,
                     OperatorFactors, bosonic_factors, build_gauge_generators,
                     build_so2_generator, deform_factors,
                     fermion_number_operator, minibmn_factors)
from .operators import SparseOperator

__all__ = [
    "EigenResult",
    "ScanRow",
    "lowest_eigenpairs",
    "expectation",
    "dense_eigh_oracle",
    "truncation_scan",
    "write_scan_csv",
]

_MAX_DIM = 2 ** 26
_DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class EigenResult:
    """k lowest eigenpairs: ascending values, unit vectors, residual norms."""

    values: np.ndarray
    vectors: np.ndarray          # (dim, k)
    residuals: np.ndarray
    iterations: int


def _as_applyable(H):
    """Return (dim, matvec, explicit_or_None) for the supported input types."""
    if isinstance(H, SparseOperator):
        return H.dim, (lambda v: H.matrix @ v), H
    if isinstance(H, OperatorFactors):
        return H.dim, H.matvec, None
    raise TypeError(f"unsupported operator type {type(H)}")


def lowest_eigenpairs(H, k: int = 1, tol: float = _DEFAULT_TOL,
                      seed: int = 0, maxiter: int | None = None
                      ) -> EigenResult:
    """k smallest-algebraic eigenpairs of a Hermitian operator.

    Deterministic given ``seed`` (fixed random starting vector).  Refuses
    dimensions above 2^26.
    """
    dim, matvec, explicit = _as_applyable(H)
    if dim > _MAX_DIM:
        raise MemoryGuard(f"dimension {dim} exceeds guard 2^26")
    if explicit is not None and not (explicit.hermitian_hint
                                     or explicit.is_hermitian(1e-10)):
        raise NonHermitianInput("operator is not Hermitian")
    if k >= dim:
        raise DimensionMismatch("k must be < dim")
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(dim)
    # Work on sigma*I - H with which="LM": the smallest eigenvalues of H
    # become the dominant ones, which is the regime where the implicitly
    # restarted Lanczos iteration is reliable.  (Direct which="SA" can lose
    # exact zero modes: a state annihilated by H never re-enters the Krylov
    # space once filtered out.)
    sigma = _spectral_upper_bound(matvec, dim, rng) * 1.05 + 1.0
    dtype = np.complex128 if (explicit is not None
                              and np.iscomplexobj(explicit.matrix.data)) \
        or (explicit is None and H.is_complex) else np.float64
    shifted = spla.LinearOperator(
        (dim, dim), matvec=lambda v: sigma * v - matvec(v), dtype=dtype)
    # ARPACK's convergence test is relative to the shifted eigenvalue
    # (~sigma), so rescale the requested tolerance to keep it absolute.
    arpack_tol = tol / max(sigma, 1.0)
    try:
        vals, vecs = spla.eigsh(shifted, k=k, which="LM", tol=arpack_tol,
                                v0=v0, maxiter=maxiter)
    except spla.ArpackNoConvergence as exc:
        raise NoConvergence(str(exc)) from exc
    vals = sigma - vals
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    residuals = np.array([
        np.linalg.norm(matvec(vecs[:, i]) - vals[i] * vecs[:, i])
        for i in range(k)
    ])
    return EigenResult(vals, vecs, residuals, iterations=-1)


def _spectral_upper_bound(matvec, dim: int, rng) -> float:
    """Largest-magnitude eigenvalue estimate by power iteration."""
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    lam = 1.0
    for _ in range(40):
        w = matvec(v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 1.0
        lam = norm
        v = w / norm
    return float(lam)


def expectation(O, v: np.ndarray):
    """<v|O|v>; real part returned for Hermitian O with negligible imag."""
    dim, matvec, explicit = _as_applyable(O)
    if v.shape[0] != dim:
        raise DimensionMismatch(f"vector dim {v.shape[0]} != {dim}")
    val = np.vdot(v, matvec(v))
    hermitian = explicit.hermitian_hint if explicit is not None else True
    if hermitian:
        scale = max(1.0, abs(val))
        if abs(val.imag) > 1e-10 * scale:
            raise NonNegligibleImaginaryPart(
                f"imaginary part {val.imag} too large for Hermitian operator")
        return float(val.real)
    return complex(val)


# ---------------------------------------------------------------------------
# dense oracle (independent implementation; no LAPACK eigensolver call)

def dense_eigh_oracle(H) -> np.ndarray:
    """All eigenvalues of a Hermitian matrix, ascending.

    Householder reduction to tridiagonal form followed by the implicit-shift
    QL iteration, built from numpy array primitives only.  Serves as the
    independent cross-check oracle for the ARPACK path at dims <= 4096.
    """
    if isinstance(H, SparseOperator):
        A = H.to_dense().astype(np.complex128)
    else:
        A = np.asarray(H, dtype=np.complex128).copy()
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionMismatch("matrix must be square")
    if np.max(np.abs(A - A.conj().T)) > 1e-10:
        raise NonHermitianInput("oracle requires a Hermitian matrix")

    # Householder tridiagonalization.
    for kcol in range(n - 2):
        x = A[kcol + 1:, kcol].copy()
        xnorm = np.linalg.norm(x)
        if xnorm == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        alpha = -phase * xnorm
        u = x.copy()
        u[0] -= alpha
        unorm = np.linalg.norm(u)
        if unorm == 0.0:
            continue
        u /= unorm
        # A <- P A P with P = I - 2 u u^dag acting on the trailing block
        block = A[kcol + 1:, kcol:]
        block -= 2.0 * np.outer(u, u.conj() @ block)
        block = A[kcol:, kcol + 1:]
        block -= 2.0 * np.outer(block @ u, u.conj())

    d = np.real(np.diag(A)).copy()
    e = np.abs(np.diag(A, -1)).astype(np.float64)  # phases drop out
    return np.sort(_tql_eigenvalues(d, e))


def _tql_eigenvalues(d: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Implicit-shift QL eigenvalues of a real symmetric tridiagonal matrix."""
    n = d.size
    d = d.copy()
    ework = np.zeros(n)
    ework[: n - 1] = e
    eps = np.finfo(np.float64).eps
    for l in range(n):
        n_iter = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(ework[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            n_iter += 1
            if n_iter > 64:
                raise NoConvergence("QL iteration failed to converge")
            g = (d[l + 1] - d[l]) / (2.0 * ework[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + ework[l] / (g + np.copysign(r, g))
            s = c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * ework[i]
                b = c * ework[i]
                r = np.hypot(f, g)
                ework[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    ework[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
            if underflow:
                continue
            d[l] -= p
            ework[l] = g
            ework[m] = 0.0
    return d


# ---------------------------------------------------------------------------
# truncation scans

@dataclass(frozen=True)
class ScanRow:
    """One (cutoff, level) record of a truncation scan.

    ``energy`` is the expectation of the *undeformed* Hamiltonian in the
    eigenstate of the solved (possibly deformed) operator; ``m_exp`` is the
    pi/2-rotation expectation Re<exp(i pi M/2)> for the bosonic model and the
    plain generator expectation <M> for minimal BMN.
    """

    model: str
    N: int
    lam: float
    mu: float
    cutoff: int
    c: float
    cprime: float
    J: float
    level: int
    energy: float
    g2: float
    m_exp: float
    fermion_number: float
    residual: float
    eigenvalue: float


def _rotation_expectation(M: SparseOperator, v: np.ndarray) -> float:
    rotated = spla.expm_multiply((0.5j * np.pi) * M.matrix,
                                 v.astype(np.complex128))
    return float(np.real(np.vdot(v, rotated)))


def truncation_scan(params, cutoffs, levels: int = 1,
                    deformation: Deformation | None = None,
                    tol: float = _DEFAULT_TOL, seed: int = 0
                    ) -> list[ScanRow]:
    """Solve the model at each cutoff and record per-level observables.

    The ground-energy difference series |E0(cutoff) - E0(cutoff - 1)| used in
    convergence plots can be recovered with :func:`ground_energy_diffs`.
    """
    cutoffs = list(cutoffs)
    if cutoffs != sorted(cutoffs):
        raise ValueError("cutoffs must be ascending")
    rows = []
    for cut in cutoffs:
        p = dataclasses.replace(params, cutoff=cut)
        rows.extend(_scan_one(p, levels, deformation, tol, seed))
    return rows


def _scan_one(p, levels, deformation, tol, seed) -> list[ScanRow]:
    is_mini = isinstance(p, MiniBMNParams)
    basis = p.basis()
    factors = minibmn_factors(p, basis) if is_mini else \
        bosonic_factors(p, basis)
    gens = build_gauge_generators(p, basis)
    M = build_so2_generator(p, basis)
    defo = deformation or Deformation()
    solved = deform_factors(factors, gens, M, defo)
    res = lowest_eigenpairs(solved, k=levels, tol=tol, seed=seed)
    nf = fermion_number_operator(basis) if is_mini else None

    recs = []
    for lvl in range(levels):
        v = res.vectors[:, lvl]
        energy = float(np.real(np.vdot(v, factors.matvec(v))))
        g2 = float(sum(np.linalg.norm(g.matrix @ v) ** 2 for g in gens))
        if is_mini:
            m_exp = expectation(M, v)
            fnum = expectation(nf, v)
        else:
            m_exp = _rotation_expectation(M, v)
            fnum = 0.0
        recs.append(ScanRow(
            model="minibmn" if is_mini else "bosonic",
            N=p.N, lam=p.lam,
            mu=p.mu if is_mini else 0.0,
            cutoff=p.cutoff, c=defo.c, cprime=defo.cprime, J=defo.J,
            level=lvl, energy=energy, g2=g2, m_exp=m_exp,
            fermion_number=fnum,
            residual=float(res.residuals[lvl]),
            eigenvalue=float(res.values[lvl]),
        ))
    # deterministic ordering for (near-)degenerate levels
    recs.sort(key=lambda r: (round(r.eigenvalue / max(tol, 1e-12)) * tol,
                             -r.m_exp))
    return [dataclasses.replace(r, level=i) for i, r in enumerate(recs)]


def ground_energy_diffs(rows: list[ScanRow]) -> list[tuple[int, float]]:
    """|E0(cutoff) - E0(previous cutoff)| series from scan rows."""
    ground = sorted((r.cutoff, r.energy) for r in rows if r.level == 0)
    return [(c2, abs(e2 - e1))
            for (c1, e1), (c2, e2) in zip(ground, ground[1:])]


_CSV_FIELDS = ["model", "N", "lambda", "mu", "Lambda", "c", "cprime", "J",
               "level", "energy", "g2", "m_exp", "fermion_number", "residual"]


def write_scan_csv(rows: list[ScanRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_CSV_FIELDS)
        for r in rows:
            w.writerow([r.model, r.N, f"{r.lam:.9g}", f"{r.mu:.9g}",
                        r.cutoff, f"{r.c:.9g}", f"{r.cprime:.9g}",
                        f"{r.J:.9g}", r.level, f"{r.energy:.9g}",
                        f"{r.g2:.9g}", f"{r.m_exp:.9g}",
                        f"{r.fermion_number:.9g}", f"{r.residual:.9g}"])
