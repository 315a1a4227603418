"""Elementary truncated operators on tensor-product Fock ⊗ fermion bases.

Provides the truncated bosonic ladder operators, fermionic Jordan-Wigner
operators, SU(N) structure constants, and the tensor-product embedding of
local operators into a global sparse-operator type.

Conventions (fixed once, used everywhere):

* Bosonic sites are ordered with the matrix index I = 1..d outer and the
  color index alpha = 1..N^2-1 inner; fermionic sites are appended after all
  bosonic sites.
* Site 0 is the most significant Kronecker factor, i.e. the global basis
  index is ``n_0 * (dim_1 * dim_2 * ...) + n_1 * ... + n_last``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, UnsupportedGroup

__all__ = [
    "SparseOperator",
    "BasisSpec",
    "StructureConstants",
    "structure_constants",
    "truncated_ladder",
    "position_operator",
    "momentum_operator",
    "embed_boson",
    "jordan_wigner",
]

_HERM_TOL = 1e-12


@dataclass(frozen=True)
class SparseOperator:
    """Immutable sparse operator on a fixed Hilbert space.

    Thin wrapper around a canonicalized ``scipy.sparse`` CSR matrix carrying
    the global dimension and a hermiticity hint.
    """

    matrix: sp.csr_matrix
    hermitian_hint: bool = False

    def __post_init__(self):
        m = self.matrix.tocsr()
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        object.__setattr__(self, "matrix", m)
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"operator must be square, got {m.shape}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    @property
    def entries(self) -> list[tuple[int, int, complex]]:
        """Canonical (row, col, value) list, sorted by (row, col)."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [
            (int(coo.row[i]), int(coo.col[i]), complex(coo.data[i]))
            for i in order
        ]

    @classmethod
    def from_entries(
        cls,
        dim: int,
        entries: Iterable[tuple[int, int, complex]],
        hermitian_hint: bool = False,
    ) -> "SparseOperator":
        rows, cols, vals = [], [], []
        for r, c, v in entries:
            if not (0 <= r < dim and 0 <= c < dim):
                raise DimensionMismatch(f"entry ({r},{c}) outside dim {dim}")
            rows.append(r)
            cols.append(c)
            vals.append(v)
        m = sp.csr_matrix(
            (np.asarray(vals), (rows, cols)), shape=(dim, dim)
        )
        return cls(m, hermitian_hint=hermitian_hint)

    @classmethod
    def identity(cls, dim: int) -> "SparseOperator":
        return cls(sp.identity(dim, dtype=np.float64, format="csr"), True)

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def dag(self) -> "SparseOperator":
        return SparseOperator(self.matrix.conjugate().T.tocsr(),
                              self.hermitian_hint)

    def is_hermitian(self, tol: float = _HERM_TOL) -> bool:
        d = self.matrix - self.matrix.conjugate().T
        return d.nnz == 0 or np.max(np.abs(d.data)) < tol

    def matvec(self, v: np.ndarray) -> np.ndarray:
        if v.shape[0] != self.dim:
            raise DimensionMismatch(
                f"vector dim {v.shape[0]} != operator dim {self.dim}")
        return self.matrix @ v

    def _coerce(self, other) -> sp.csr_matrix:
        if isinstance(other, SparseOperator):
            if other.dim != self.dim:
                raise DimensionMismatch(
                    f"operator dims {self.dim} != {other.dim}")
            return other.matrix
        raise TypeError(f"expected SparseOperator, got {type(other)}")

    def __add__(self, other) -> "SparseOperator":
        hint = self.hermitian_hint and isinstance(other, SparseOperator) \
            and other.hermitian_hint
        return SparseOperator(self.matrix + self._coerce(other), hint)

    def __sub__(self, other) -> "SparseOperator":
        hint = self.hermitian_hint and isinstance(other, SparseOperator) \
            and other.hermitian_hint
        return SparseOperator(self.matrix - self._coerce(other), hint)

    def __matmul__(self, other) -> "SparseOperator":
        return SparseOperator(self.matrix @ self._coerce(other), False)

    def __mul__(self, scalar) -> "SparseOperator":
        hint = self.hermitian_hint and complex(scalar).imag == 0.0
        return SparseOperator(self.matrix * scalar, hint)

    __rmul__ = __mul__

    def max_abs_diff(self, other: "SparseOperator") -> float:
        d = self.matrix - self._coerce(other)
        return 0.0 if d.nnz == 0 else float(np.max(np.abs(d.data)))


@dataclass(frozen=True)
class BasisSpec:
    """Tensor-product basis layout for a model Hilbert space.

    ``site_order`` maps the flat site index to ``(species, I, alpha)`` where
    species is "b" (boson, local dimension = cutoff) or "f" (fermion, local
    dimension 2); for fermions I is irrelevant and set to 0.
    """

    n_boson_sites: int
    cutoff: int
    n_fermion_sites: int
    site_order: tuple[tuple[str, int, int], ...] = field(default=())

    def __post_init__(self):
        if self.cutoff < 2:
            raise ValueError("cutoff must be >= 2")
        if not self.site_order:
            raise ValueError("site_order must be provided (use builders)")

    @classmethod
    def bosonic(cls, N: int, cutoff: int, d: int = 2) -> "BasisSpec":
        n_colors = N * N - 1
        order = tuple(("b", I, a) for I in range(d) for a in range(n_colors))
        return cls(d * n_colors, cutoff, 0, order)

    @classmethod
    def minibmn(cls, N: int, cutoff: int, d: int = 2) -> "BasisSpec":
        n_colors = N * N - 1
        order = tuple(
            ("b", I, a) for I in range(d) for a in range(n_colors)
        ) + tuple(("f", 0, a) for a in range(n_colors))
        return cls(d * n_colors, cutoff, n_colors, order)

    @property
    def n_sites(self) -> int:
        return self.n_boson_sites + self.n_fermion_sites

    @property
    def dim(self) -> int:
        return self.cutoff ** self.n_boson_sites * 2 ** self.n_fermion_sites

    def boson_site(self, I: int, alpha: int) -> int:
        """Flat site index of boson (I, alpha)."""
        return self.site_order.index(("b", I, alpha))

    def fermion_site(self, alpha: int) -> int:
        """Flat site index of fermion alpha (0-based within fermions)."""
        return self.site_order.index(("f", 0, alpha))

    def local_dim(self, site: int) -> int:
        return self.cutoff if self.site_order[site][0] == "b" else 2


@dataclass(frozen=True)
class StructureConstants:
    """SU(N) generators normalized to Tr(tau_a tau_b) = delta_ab."""

    N: int
    f: np.ndarray                 # (n, n, n) real, totally antisymmetric
    generators: np.ndarray        # (n, N, N) complex

    @property
    def n_colors(self) -> int:
        return self.N * self.N - 1


def _pauli_matrices() -> np.ndarray:
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return np.stack([sx, sy, sz])


def _gell_mann_matrices() -> np.ndarray:
    l = np.zeros((8, 3, 3), dtype=complex)
    l[0, 0, 1] = l[0, 1, 0] = 1
    l[1, 0, 1], l[1, 1, 0] = -1j, 1j
    l[2, 0, 0], l[2, 1, 1] = 1, -1
    l[3, 0, 2] = l[3, 2, 0] = 1
    l[4, 0, 2], l[4, 2, 0] = -1j, 1j
    l[5, 1, 2] = l[5, 2, 1] = 1
    l[6, 1, 2], l[6, 2, 1] = -1j, 1j
    l[7, 0, 0] = l[7, 1, 1] = 1 / np.sqrt(3)
    l[7, 2, 2] = -2 / np.sqrt(3)
    return l


def structure_constants(N: int) -> StructureConstants:
    """Structure constants f_abc of SU(N) with Tr(tau_a tau_b) = delta_ab.

    Generators are tau_a = sigma_a / sqrt(2) for SU(2) and Gell-Mann
    matrices / sqrt(2) for SU(3); then [tau_a, tau_b] = i f_abc tau_c with
    f totally antisymmetric (f_123 = sqrt(2) for SU(2)).
    """
    if N == 2:
        tau = _pauli_matrices() / np.sqrt(2)
    elif N == 3:
        tau = _gell_mann_matrices() / np.sqrt(2)
    else:
        raise UnsupportedGroup(f"SU({N}) not supported (N in {{2, 3}})")
    n = N * N - 1
    # f_abc = -i Tr([tau_a, tau_b] tau_c) given Tr(tau_c tau_c) = 1
    comm = np.einsum("aij,bjk->abik", tau, tau)
    comm = comm - np.einsum("bij,ajk->abik", tau, tau)
    f = np.real(-1j * np.einsum("abik,cki->abc", comm, tau))
    f[np.abs(f) < 1e-14] = 0.0
    return StructureConstants(N=N, f=f, generators=tau)


def truncated_ladder(cutoff: int) -> tuple[SparseOperator, SparseOperator,
                                           SparseOperator]:
    """Truncated lowering/raising/number operators on a single mode.

    ``a`` has matrix elements sqrt(n+1) at (n, n+1); ``a_dag`` is its
    transpose; ``n`` is diag(0 .. cutoff-1).  The truncated commutator is
    [a, a_dag] = I - cutoff |cutoff-1><cutoff-1|.
    """
    if cutoff < 2:
        raise ValueError("cutoff must be >= 2")
    amp = np.sqrt(np.arange(1, cutoff, dtype=np.float64))
    a = sp.diags(amp, offsets=1, format="csr")
    adag = sp.diags(amp, offsets=-1, format="csr")
    num = sp.diags(np.arange(cutoff, dtype=np.float64), format="csr")
    return (SparseOperator(a), SparseOperator(adag), SparseOperator(num, True))


def position_operator(cutoff: int, mass: float) -> SparseOperator:
    """X = (a + a_dag) / sqrt(2 m) on a single mode."""
    a, adag, _ = truncated_ladder(cutoff)
    return SparseOperator((a.matrix + adag.matrix) / np.sqrt(2.0 * mass), True)


def momentum_operator(cutoff: int, mass: float) -> SparseOperator:
    """P = i sqrt(m/2) (a_dag - a) on a single mode."""
    a, adag, _ = truncated_ladder(cutoff)
    return SparseOperator(
        1j * np.sqrt(mass / 2.0) * (adag.matrix - a.matrix), True)


def _kron_all(factors: Sequence[sp.spmatrix]) -> sp.csr_matrix:
    out = factors[0]
    for f in factors[1:]:
        out = sp.kron(out, f, format="csr")
    return out.tocsr()


def embed_boson(site: int, local_op: SparseOperator,
                basis: BasisSpec) -> SparseOperator:
    """Embed a single-mode operator at a bosonic site of the global basis.

    Site 0 is the most significant Kronecker factor; the fermionic factor
    (if any) is tensored as identity.
    """
    if site >= basis.n_boson_sites:
        raise DimensionMismatch(
            f"site {site} is not a bosonic site (n={basis.n_boson_sites})")
    if local_op.dim != basis.cutoff:
        raise DimensionMismatch(
            f"local operator dim {local_op.dim} != cutoff {basis.cutoff}")
    left = basis.cutoff ** site
    right = (basis.cutoff ** (basis.n_boson_sites - site - 1)
             * 2 ** basis.n_fermion_sites)
    m = _kron_all([sp.identity(left, format="csr"),
                   local_op.matrix,
                   sp.identity(right, format="csr")])
    return SparseOperator(m, local_op.hermitian_hint)


def jordan_wigner(k: int, basis: BasisSpec) -> tuple[SparseOperator,
                                                     SparseOperator]:
    """Jordan-Wigner fermion operators (xi_k, xi_k_dag) at fermion site k.

    xi_k = I_bosonic (x) Z^k (x) sigma_minus (x) I_rest with
    sigma_minus = [[0, 1], [0, 0]]; satisfies {xi_j, xi_k_dag} = delta_jk I.
    """
    if basis.n_fermion_sites < 1:
        raise DimensionMismatch("basis has no fermionic sites")
    if not 0 <= k < basis.n_fermion_sites:
        raise DimensionMismatch(
            f"fermion index {k} out of range {basis.n_fermion_sites}")
    z = sp.diags([1.0, -1.0], format="csr")
    lower = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
    dim_b = basis.cutoff ** basis.n_boson_sites
    factors = [sp.identity(dim_b, format="csr")]
    factors += [z] * k
    factors.append(lower)
    rest = basis.n_fermion_sites - k - 1
    if rest:
        factors.append(sp.identity(2 ** rest, format="csr"))
    xi = SparseOperator(_kron_all(factors))
    return xi, xi.dag()
