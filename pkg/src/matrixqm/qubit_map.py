"""Pauli-string encoding of truncated operators.

A truncated operator whose dimension is a power of two can be written
exactly as a weighted sum of Pauli strings,

    O = sum_P c_P P,    c_P = Tr(P O) / 2**n,

over the 4**n strings P in {I, X, Y, Z}**n.  This module extracts the
nonzero coefficients efficiently (grouping matrix entries by the bit-flip
mask row XOR col and running a fast Walsh--Hadamard transform per mask),
evaluates expectation values of Pauli sums on statevectors without
densifying, and reads/writes a plain-text interchange format.

Qubit labeling is little-endian: character ``j`` of a Pauli string acts
on matrix-index bit ``2**j``.  For a boson site truncated at a
power-of-two cutoff this places the least-significant occupation bit on
the site's first-listed qubit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, NonPowerOfTwoDimension
from .operators import SparseOperator

__all__ = ["PauliSum", "encode", "decode", "pauli_expectation",
           "write_pauli_sum", "read_pauli_sum"]

_COEFF_CUTOFF = 1e-14

_PAULI_DENSE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


@dataclass(frozen=True)
class PauliSum:
    """Immutable weighted sum of Pauli strings over ``n_qubits`` qubits.

    ``terms`` holds ``(coefficient, string)`` pairs with distinct strings
    in a canonical (lexicographic) order; coefficients with magnitude
    below 1e-14 are dropped at construction.  If ``hermitian`` is set,
    all coefficients are real-valued (stored as complex with zero
    imaginary part).
    """

    n_qubits: int
    terms: tuple[tuple[complex, str], ...]
    hermitian: bool = False

    @staticmethod
    def from_terms(n_qubits: int,
                   terms: Iterable[tuple[complex, str]],
                   hermitian: bool = False) -> "PauliSum":
        """Merge duplicate strings, drop negligible coefficients, sort."""
        merged: dict[str, complex] = {}
        for coeff, string in terms:
            if len(string) != n_qubits:
                raise DimensionMismatch(
                    f"Pauli string {string!r} has length {len(string)}, "
                    f"expected {n_qubits}")
            if any(ch not in "IXYZ" for ch in string):
                raise ValueError(f"invalid Pauli string {string!r}")
            merged[string] = merged.get(string, 0.0) + complex(coeff)
        kept = []
        for string in sorted(merged):
            c = merged[string]
            if abs(c) < _COEFF_CUTOFF:
                continue
            if hermitian:
                c = complex(c.real, 0.0)
            kept.append((c, string))
        return PauliSum(n_qubits, tuple(kept), hermitian)

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if self.n_qubits != other.n_qubits:
            raise DimensionMismatch("qubit counts differ")
        return PauliSum.from_terms(
            self.n_qubits, list(self.terms) + list(other.terms),
            self.hermitian and other.hermitian)

    def scaled(self, factor: complex) -> "PauliSum":
        herm = self.hermitian and abs(complex(factor).imag) == 0.0
        return PauliSum.from_terms(
            self.n_qubits,
            [(c * factor, s) for c, s in self.terms], herm)


def _string_masks(string: str) -> tuple[int, int]:
    """Bit masks (x, z) of a Pauli string; char j acts on bit 2**j."""
    x = 0
    z = 0
    for j, ch in enumerate(string):
        if ch in ("X", "Y"):
            x |= 1 << j
        if ch in ("Z", "Y"):
            z |= 1 << j
    return x, z


def _masks_to_string(x: int, z: int, n_qubits: int) -> str:
    chars = []
    for j in range(n_qubits):
        xb = (x >> j) & 1
        zb = (z >> j) & 1
        chars.append("IXZY"[xb + 2 * zb] if xb + 2 * zb != 3 else "Y")
    return "".join(chars)


def _fwht(v: np.ndarray) -> np.ndarray:
    """In-place fast Walsh--Hadamard transform (no 1/2**n factor)."""
    out = v.copy()
    h = 1
    n = out.shape[0]
    while h < n:
        out = out.reshape(-1, 2, h)
        a = out[:, 0, :] + out[:, 1, :]
        b = out[:, 0, :] - out[:, 1, :]
        out = np.stack([a, b], axis=1).reshape(n)
        h *= 2
    return out


def _popcount(values: np.ndarray) -> np.ndarray:
    count = np.zeros_like(values)
    v = values.copy()
    while np.any(v):
        count += v & 1
        v >>= 1
    return count


def encode(op: SparseOperator, n_qubits: int) -> PauliSum:
    """Decompose ``op`` into Pauli strings: c_P = Tr(P op) / 2**n.

    Requires ``op.dim == 2**n_qubits``; raises
    :class:`NonPowerOfTwoDimension` otherwise.  The reconstruction
    ``decode(encode(op)) == op`` is exact up to floating-point rounding.
    """
    dim = 1 << n_qubits
    if op.dim != dim:
        raise NonPowerOfTwoDimension(
            f"operator dimension {op.dim} is not 2**{n_qubits}")
    coo = op.matrix.tocoo()
    rows = coo.row.astype(np.int64)
    cols = coo.col.astype(np.int64)
    data = coo.data.astype(complex)
    hermitian = op.is_hermitian()

    terms: list[tuple[complex, str]] = []
    masks = rows ^ cols
    zs = np.arange(dim, dtype=np.int64)
    for x in np.unique(masks):
        sel = masks == x
        w = np.zeros(dim, dtype=complex)
        # w[u] = A[u ^ x, u]; Tr(P A) = sum_u P[u, u^x] A[u^x, u].
        w[cols[sel]] = data[sel]
        what = _fwht(w)
        phases = (-1j) ** _popcount(zs & x)
        coeffs = (phases * what) / dim
        keep = np.abs(coeffs) >= _COEFF_CUTOFF
        for z in zs[keep]:
            terms.append((complex(coeffs[z]),
                          _masks_to_string(int(x), int(z), n_qubits)))
    return PauliSum.from_terms(n_qubits, terms, hermitian=hermitian)


def decode(h: PauliSum) -> np.ndarray:
    """Dense matrix of a Pauli sum (test-only inverse of :func:`encode`).

    Character ``j`` acts on matrix-index bit ``2**j``, so the Kronecker
    product runs over the string reversed.
    """
    dim = 1 << h.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for coeff, string in h.terms:
        term = np.array([[1.0 + 0.0j]])
        for ch in reversed(string):
            term = np.kron(term, _PAULI_DENSE[ch])
        out += coeff * term
    return out


def apply_pauli(string: str, psi: np.ndarray) -> np.ndarray:
    """Apply a single Pauli string to a statevector."""
    n_qubits = len(string)
    dim = 1 << n_qubits
    if psi.shape[0] != dim:
        raise DimensionMismatch(
            f"statevector length {psi.shape[0]} != 2**{n_qubits}")
    x, z = _string_masks(string)
    n_y = sum(1 for ch in string if ch == "Y")
    u = np.arange(dim, dtype=np.int64)
    # P[u, u^x] = (-i)**|Y| * (-1)**popcount(u & z)
    signs = 1.0 - 2.0 * (_popcount(u & z) & 1)
    out = ((-1j) ** n_y) * signs * psi[u ^ x]
    return out


def pauli_expectation(h: PauliSum, psi: np.ndarray) -> float:
    """Real expectation value sum_P c_P <psi|P|psi> of a hermitian sum."""
    psi = np.asarray(psi)
    dim = 1 << h.n_qubits
    if psi.shape != (dim,):
        raise DimensionMismatch(
            f"statevector shape {psi.shape} incompatible with "
            f"{h.n_qubits} qubits")
    acc = np.zeros(dim, dtype=complex)
    for coeff, string in h.terms:
        acc += coeff * apply_pauli(string, psi)
    return float(np.real(np.vdot(psi, acc)))


def write_pauli_sum(h: PauliSum, path: str) -> None:
    """Write one term per line as ``<re> <im> <string>``."""
    with open(path, "w", encoding="ascii") as fh:
        for coeff, string in h.terms:
            fh.write(f"{coeff.real!r} {coeff.imag!r} {string}\n")


def read_pauli_sum(path: str) -> PauliSum:
    """Read the text format written by :func:`write_pauli_sum`."""
    terms: list[tuple[complex, str]] = []
    n_qubits = None
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            re_s, im_s, string = line.split()
            if n_qubits is None:
                n_qubits = len(string)
            terms.append((complex(float(re_s), float(im_s)), string))
    if n_qubits is None:
        raise ValueError(f"no Pauli terms found in {path}")
    hermitian = all(c.imag == 0.0 for c, _ in terms)
    return PauliSum.from_terms(n_qubits, terms, hermitian=hermitian)
