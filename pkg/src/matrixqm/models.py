"""Hamiltonians, gauge generators, SO(2) generator, and supercharge.

Assembles the bosonic SU(N) two-matrix Hamiltonian and the supersymmetric
"minimal BMN" Hamiltonian (SU(2)) on a truncated Fock basis, along with the
gauge generators G_alpha, the SO(2) angular-momentum generator M, the
supercharge Q, and penalty-deformed Hamiltonians
H' = H + c sum_a G_a^2 + c' (M - J)^2.

Large Hilbert spaces are handled through :class:`OperatorFactors`, which keeps
the Hamiltonian as (diagonal + sum of squared sparse factors + direct sparse
terms) and applies it matrix-free; ``to_sparse`` assembles the explicit
matrix when affordable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, UnsupportedGroup
from .operators import (BasisSpec, SparseOperator, jordan_wigner,
                        structure_constants, truncated_ladder)

__all__ = [
    "BosonicParams",
    "MiniBMNParams",
    "Deformation",
    "OperatorFactors",
    "build_bosonic_hamiltonian",
    "bosonic_factors",
    "build_minibmn_hamiltonian",
    "minibmn_factors",
    "build_gauge_generators",
    "build_so2_generator",
    "build_supercharge",
    "deform",
    "deform_factors",
    "fermion_number_operator",
    "fermion_parity_operator",
]


@dataclass(frozen=True)
class BosonicParams:
    """Bosonic two-matrix model parameters ('t Hooft coupling lam = g^2 N)."""

    N: int
    lam: float
    cutoff: int
    m2: float = 1.0
    d: int = 2

    def __post_init__(self):
        if self.m2 <= 0:
            raise ValueError("m2 must be positive")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if self.d != 2:
            raise UnsupportedGroup("only d = 2 matrices supported")

    @property
    def mass(self) -> float:
        return float(np.sqrt(self.m2))

    @property
    def g2(self) -> float:
        return self.lam / self.N

    def basis(self) -> BasisSpec:
        return BasisSpec.bosonic(self.N, self.cutoff, self.d)


@dataclass(frozen=True)
class MiniBMNParams:
    """Minimal BMN parameters; oscillator mass equals the deformation mu."""

    N: int
    mu: float
    lam: float
    cutoff: int

    def __post_init__(self):
        if self.N != 2:
            raise UnsupportedGroup("minimal BMN builders support N = 2 only")
        if self.mu < 0:
            raise ValueError("mu must be non-negative")
        if self.mu == 0:
            import warnings
            warnings.warn("mu = 0: flat directions make spectra "
                          "cutoff-dominated", stacklevel=2)
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")

    @property
    def g2(self) -> float:
        return self.lam / self.N

    def basis(self) -> BasisSpec:
        return BasisSpec.minibmn(self.N, self.cutoff)


@dataclass(frozen=True)
class Deformation:
    """Penalty deformation H' = H + c sum G^2 + c' (M - J)^2."""

    c: float = 0.0
    cprime: float = 0.0
    J: float = 0.0

    def __post_init__(self):
        if self.c < 0 or self.cprime < 0:
            raise ValueError("penalty coefficients must be non-negative")


@dataclass(frozen=True)
class OperatorFactors:
    """Hermitian operator in factored form: diag + sum c_k S_k^2 + sum A_j.

    Every S_k is Hermitian sparse; A_j are explicit sparse terms.  The
    factored form supports matrix-free application (for eigensolvers at
    dimensions where the assembled squares would not fit in memory) and
    explicit assembly via :meth:`to_sparse`.
    """

    dim: int
    diag: np.ndarray
    squared: tuple[tuple[float, SparseOperator], ...] = ()
    direct: tuple[SparseOperator, ...] = ()

    def __post_init__(self):
        if self.diag.shape != (self.dim,):
            raise DimensionMismatch("diagonal length must equal dim")
        for _, s in self.squared:
            if s.dim != self.dim:
                raise DimensionMismatch("factor dim mismatch")
        for a in self.direct:
            if a.dim != self.dim:
                raise DimensionMismatch("direct term dim mismatch")

    @property
    def is_complex(self) -> bool:
        return any(np.iscomplexobj(a.matrix.data) for a in self.direct) or \
            any(np.iscomplexobj(s.matrix.data) for _, s in self.squared)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        dtype = np.complex128 if (self.is_complex or np.iscomplexobj(v)) \
            else np.float64
        out = (self.diag * v).astype(dtype)
        for c, s in self.squared:
            out += c * (s.matrix @ (s.matrix @ v))
        for a in self.direct:
            out += a.matrix @ v
        return out

    def as_linear_operator(self):
        from scipy.sparse.linalg import LinearOperator
        dtype = np.complex128 if self.is_complex else np.float64
        return LinearOperator((self.dim, self.dim), matvec=self.matvec,
                              dtype=dtype)

    def to_sparse(self) -> SparseOperator:
        m = sp.diags(self.diag, format="csr")
        for c, s in self.squared:
            m = m + c * (s.matrix @ s.matrix)
        for a in self.direct:
            m = m + a.matrix
        return SparseOperator(m.tocsr(), True)

    def plus(self, squared: Sequence[tuple[float, SparseOperator]] = (),
             direct: Sequence[SparseOperator] = (),
             diag: np.ndarray | None = None) -> "OperatorFactors":
        new_diag = self.diag if diag is None else self.diag + diag
        return OperatorFactors(self.dim, new_diag,
                               self.squared + tuple(squared),
                               self.direct + tuple(direct))


# ---------------------------------------------------------------------------
# building blocks

def _occupation_diag(basis: BasisSpec, site: int) -> np.ndarray:
    """Diagonal of the embedded number operator at a given site."""
    local = np.arange(basis.local_dim(site), dtype=np.float64)
    left = int(np.prod([basis.local_dim(s) for s in range(site)], initial=1))
    right = basis.dim // (left * basis.local_dim(site))
    return np.tile(np.repeat(local, right), left)


def _embed_site(site: int, local: sp.spmatrix, basis: BasisSpec,
                hermitian: bool = True) -> SparseOperator:
    """Embed a local operator at any (boson or fermion) site, no JW string."""
    left = int(np.prod([basis.local_dim(s) for s in range(site)], initial=1))
    right = basis.dim // (left * local.shape[0])
    m = sp.kron(sp.identity(left, format="csr"), local, format="csr")
    m = sp.kron(m, sp.identity(right, format="csr"), format="csr")
    return SparseOperator(m.tocsr(), hermitian)


def _x_local(cutoff: int, mass: float) -> sp.csr_matrix:
    a, adag, _ = truncated_ladder(cutoff)
    return ((a.matrix + adag.matrix) / np.sqrt(2.0 * mass)).tocsr()


def _boson_x_ops(basis: BasisSpec, mass: float, d: int,
                 n_colors: int) -> list[list[SparseOperator]]:
    """Embedded position operators X[I][alpha] (real symmetric)."""
    x = _x_local(basis.cutoff, mass)
    return [[_embed_site(basis.boson_site(I, a), x, basis)
             for a in range(n_colors)] for I in range(d)]


def _hop_local(cutoff: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    a, adag, _ = truncated_ladder(cutoff)
    return a.matrix, adag.matrix


def _quartic_factors(f: np.ndarray, x_ops, g2: float, d: int,
                     n_colors: int) -> list[tuple[float, SparseOperator]]:
    """Quartic term as (g^2/2) sum_gamma T_gamma^2 for d = 2.

    T_gamma = sum_{ab} f_{ab gamma} X_{1a} X_{2b} is Hermitian (operators at
    distinct sites commute, f real); the (I, J) = (2, 1) term duplicates the
    (1, 2) one, hence the single coefficient g^2/2 from the g^2/4 sum.
    """
    factors = []
    for gamma in range(n_colors):
        t = None
        for a in range(n_colors):
            for b in range(n_colors):
                coeff = f[a, b, gamma]
                if coeff == 0.0:
                    continue
                term = coeff * (x_ops[0][a].matrix @ x_ops[1][b].matrix)
                t = term if t is None else t + term
        if t is not None and abs(t).max() > 0:
            factors.append((g2 / 2.0, SparseOperator(t.tocsr(), True)))
    return factors


def _harmonic_diag(basis: BasisSpec, mass: float) -> np.ndarray:
    """Diagonal of m sum_sites (n + 1/2) over bosonic sites."""
    diag = np.zeros(basis.dim)
    for s in range(basis.n_boson_sites):
        diag += mass * (_occupation_diag(basis, s) + 0.5)
    return diag


# ---------------------------------------------------------------------------
# bosonic model

def bosonic_factors(p: BosonicParams,
                    basis: BasisSpec | None = None) -> OperatorFactors:
    """Bosonic Hamiltonian m sum(n+1/2) + (g^2/4) sum (f X X)^2, factored."""
    basis = basis or p.basis()
    _check_bosonic_basis(p, basis)
    sc = structure_constants(p.N)
    x_ops = _boson_x_ops(basis, p.mass, p.d, sc.n_colors)
    quartic = _quartic_factors(sc.f, x_ops, p.g2, p.d, sc.n_colors) \
        if p.lam > 0 else []
    return OperatorFactors(basis.dim, _harmonic_diag(basis, p.mass),
                           tuple(quartic))


def build_bosonic_hamiltonian(p: BosonicParams,
                              basis: BasisSpec | None = None
                              ) -> SparseOperator:
    return bosonic_factors(p, basis).to_sparse()


def _check_bosonic_basis(p, basis):
    n_colors = p.N * p.N - 1
    if basis.n_boson_sites != p.d * n_colors or basis.n_fermion_sites != 0:
        raise DimensionMismatch("basis inconsistent with bosonic params")
    if basis.cutoff != p.cutoff:
        raise DimensionMismatch("basis cutoff != params cutoff")


# ---------------------------------------------------------------------------
# gauge generators and SO(2) generator

def _adjoint_coeffs(p) -> np.ndarray:
    """Coefficient tensor of the gauge generators.

    Normalized as f / sqrt(2) (the Levi-Civita symbol for SU(2)) for both
    models; this is the normalization in which the reference <G^2> tables
    are quoted (the f-normalized Casimir is exactly 2x larger for SU(2)).
    """
    sc = structure_constants(p.N)
    return sc.f / np.sqrt(2.0)


def build_gauge_generators(p, basis: BasisSpec | None = None
                           ) -> list[SparseOperator]:
    """G_a = i sum_{bc} coeff_abc (sum_I a_dag_{Ib} a_{Ic} [+ xi_dag_b xi_c])."""
    basis = basis or p.basis()
    coeffs = _adjoint_coeffs(p)
    n_colors = coeffs.shape[0]
    d = getattr(p, "d", 2)
    a_loc, adag_loc = _hop_local(basis.cutoff)
    hop = {}
    for b in range(n_colors):
        for c in range(n_colors):
            if not np.any(coeffs[:, b, c]):
                continue
            term = None
            for I in range(d):
                sb, sc_ = basis.boson_site(I, b), basis.boson_site(I, c)
                op = (_embed_site(sb, adag_loc, basis, False).matrix
                      @ _embed_site(sc_, a_loc, basis, False).matrix)
                term = op if term is None else term + op
            if basis.n_fermion_sites:
                xb = jordan_wigner(b, basis)[1]
                xc = jordan_wigner(c, basis)[0]
                term = term + xb.matrix @ xc.matrix
            hop[(b, c)] = term
    gens = []
    for alpha in range(n_colors):
        g = None
        for (b, c), term in hop.items():
            w = coeffs[alpha, b, c]
            if w == 0.0:
                continue
            contrib = (1j * w) * term
            g = contrib if g is None else g + contrib
        if g is None:
            g = sp.csr_matrix((basis.dim, basis.dim))
        gens.append(SparseOperator(g.tocsr(), True))
    return gens


def build_so2_generator(p, basis: BasisSpec | None = None) -> SparseOperator:
    """SO(2) angular-momentum generator M.

    Bosonic part -i sum_a (a_dag_{1a} a_{2a} - a_dag_{2a} a_{1a}); minimal
    BMN subtracts 1/2 sum_a xi_dag_a xi_a (fermions carry half-integer
    charge).  The overall sign is a convention (the +/-1 pattern of the pi/2
    rotation exp(i pi M / 2) on low-lying deformed states is invariant under
    M -> -M); the relative boson/fermion sign is fixed by requiring [H, M] = 0
    on cutoff-interior states, equivalently by the supersymmetry algebra
    {Q, Q_dag} = 2 (H - mu M).
    """
    basis = basis or p.basis()
    n_colors = p.N * p.N - 1
    a_loc, adag_loc = _hop_local(basis.cutoff)
    m = None
    for al in range(n_colors):
        s1, s2 = basis.boson_site(0, al), basis.boson_site(1, al)
        hop = (_embed_site(s1, adag_loc, basis, False).matrix
               @ _embed_site(s2, a_loc, basis, False).matrix)
        term = -1j * (hop - hop.conjugate().T)
        m = term if m is None else m + term
    if basis.n_fermion_sites:
        occ = np.zeros(basis.dim)
        for al in range(basis.n_fermion_sites):
            occ += _occupation_diag(basis, basis.fermion_site(al))
        m = m - sp.diags(0.5 * occ)
    return SparseOperator(m.tocsr(), True)


def fermion_number_operator(basis: BasisSpec) -> SparseOperator:
    occ = np.zeros(basis.dim)
    for al in range(basis.n_fermion_sites):
        occ += _occupation_diag(basis, basis.fermion_site(al))
    return SparseOperator(sp.diags(occ, format="csr"), True)


def fermion_parity_operator(basis: BasisSpec) -> SparseOperator:
    occ = np.zeros(basis.dim)
    for al in range(basis.n_fermion_sites):
        occ += _occupation_diag(basis, basis.fermion_site(al))
    return SparseOperator(sp.diags((-1.0) ** occ, format="csr"), True)


# ---------------------------------------------------------------------------
# minimal BMN

def minibmn_factors(p: MiniBMNParams,
                    basis: BasisSpec | None = None) -> OperatorFactors:
    """Minimal BMN Hamiltonian in factored form.

    Harmonic part mu sum(n + 1/2) + (3 mu / 2) sum xi_dag xi - 3 mu (the
    constant cancels the bosonic zero point, making the lam = 0 ground energy
    exactly zero); bosonic quartic as in the two-matrix model with oscillator
    mass mu; Yukawa coupling between X and fermion bilinears.
    """
    basis = basis or p.basis()
    if basis.n_fermion_sites != p.N * p.N - 1 or basis.cutoff != p.cutoff:
        raise DimensionMismatch("basis inconsistent with miniBMN params")
    sc = structure_constants(p.N)
    n_colors = sc.n_colors
    g = float(np.sqrt(p.g2))

    diag = np.zeros(basis.dim)
    for s in range(basis.n_boson_sites):
        diag += p.mu * _occupation_diag(basis, s)
    for al in range(n_colors):
        diag += 1.5 * p.mu * _occupation_diag(basis, basis.fermion_site(al))

    x_ops = _boson_x_ops(basis, p.mu, 2, n_colors)
    quartic = _quartic_factors(sc.f, x_ops, p.g2, 2, n_colors) \
        if p.lam > 0 else []

    direct = []
    if p.lam > 0:
        eps = sc.f / np.sqrt(2.0)     # Levi-Civita for SU(2)
        xi = [jordan_wigner(k, basis)[0] for k in range(n_colors)]
        xid = [x.dag() for x in xi]
        yuk = None
        for al in range(n_colors):
            for be in range(n_colors):
                for ga in range(n_colors):
                    w = eps[al, be, ga]
                    if w == 0.0:
                        continue
                    xminus = -x_ops[0][al].matrix - 1j * x_ops[1][al].matrix
                    term = (1j * g / np.sqrt(2.0)) * w * (
                        xminus @ (xid[be].matrix @ xid[ga].matrix))
                    yuk = term if yuk is None else yuk + term
        yuk = yuk + yuk.conjugate().T
        direct.append(SparseOperator(yuk.tocsr(), True))

    return OperatorFactors(basis.dim, diag, tuple(quartic), tuple(direct))


def build_minibmn_hamiltonian(p: MiniBMNParams,
                              basis: BasisSpec | None = None
                              ) -> SparseOperator:
    return minibmn_factors(p, basis).to_sparse()


def build_supercharge(p: MiniBMNParams,
                      basis: BasisSpec | None = None) -> SparseOperator:
    """Supercharge of the supersymmetric model.

    Q = -sqrt(2) xi_dag_a (Pdag_Za - i mu Zdag_a) - g f_abc xi_a Z_b Zdag_c,
    in the convention where the SO(2) charge of ``build_so2_generator``
    assigns +1 to Z and -1/2 to xi.  With ``H`` from
    ``build_minibmn_hamiltonian`` and ``M`` from ``build_so2_generator``
    the algebra {Q, Qdag} = 2 (H - mu M) holds up to truncation effects
    (exactly on states away from the cutoff edge)."""
    basis = basis or p.basis()
    sc = structure_constants(p.N)
    n_colors = sc.n_colors
    g = float(np.sqrt(p.g2))
    a_loc, adag_loc = _hop_local(basis.cutoff)
    x = _x_local(basis.cutoff, p.mu)
    pmom = (1j * np.sqrt(p.mu / 2.0)) * (adag_loc - a_loc)

    def X(I, al):
        return _embed_site(basis.boson_site(I, al), x, basis).matrix

    def P(I, al):
        return _embed_site(basis.boson_site(I, al), pmom, basis, False).matrix

    def Z(al):
        return (X(0, al) - 1j * X(1, al)) / np.sqrt(2.0)

    def Zdag(al):
        return (X(0, al) + 1j * X(1, al)) / np.sqrt(2.0)

    def PZdag(al):
        return (P(0, al) + 1j * P(1, al)) / np.sqrt(2.0)

    xi = [jordan_wigner(k, basis)[0] for k in range(n_colors)]
    q = None
    for al in range(n_colors):
        term = -np.sqrt(2.0) * (xi[al].dag().matrix
                                @ (PZdag(al) - 1j * p.mu * Zdag(al)))
        q = term if q is None else q + term
    if p.lam > 0:
        for al in range(n_colors):
            for be in range(n_colors):
                for ga in range(n_colors):
                    w = sc.f[al, be, ga]
                    if w == 0.0:
                        continue
                    q = q - g * w * (
                        xi[al].matrix @ (Z(be) @ Zdag(ga)))
    return SparseOperator(q.tocsr(), False)


# ---------------------------------------------------------------------------
# deformation

def deform(H: SparseOperator, G: Sequence[SparseOperator],
           M: SparseOperator | None, d: Deformation) -> SparseOperator:
    """H' = H + c sum G_a^2 + c' (M - J)^2 as an explicit sparse operator."""
    m = H.matrix.copy()
    if d.c > 0:
        for g in G:
            if g.dim != H.dim:
                raise DimensionMismatch("generator dim mismatch")
            m = m + d.c * (g.matrix @ g.matrix)
    if d.cprime > 0:
        if M is None:
            raise DimensionMismatch("c' deformation requires M operator")
        if M.dim != H.dim:
            raise DimensionMismatch("M dim mismatch")
        mj = (M.matrix - d.J * sp.identity(H.dim, format="csr")).tocsr()
        m = m + d.cprime * (mj @ mj)
    return SparseOperator(m.tocsr(), True)


def deform_factors(factors: OperatorFactors, G: Sequence[SparseOperator],
                   M: SparseOperator | None, d: Deformation
                   ) -> OperatorFactors:
    """Factored form of the deformed Hamiltonian (penalties kept unsquared)."""
    squared = []
    if d.c > 0:
        squared += [(d.c, g) for g in G]
    if d.cprime > 0:
        if M is None:
            raise DimensionMismatch("c' deformation requires M operator")
        mj = SparseOperator(
            (M.matrix - d.J * sp.identity(factors.dim, format="csr")).tocsr(),
            True)
        squared.append((d.cprime, mj))
    return factors.plus(squared=squared)
