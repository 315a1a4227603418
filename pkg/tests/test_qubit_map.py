"""Unit tests for the Pauli-string encoding of truncated operators."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from matrixqm.errors import NonPowerOfTwoDimension
from matrixqm.models import BosonicParams, build_bosonic_hamiltonian
from matrixqm.operators import SparseOperator, truncated_ladder
from matrixqm.qubit_map import (
    PauliSum,
    apply_pauli,
    decode,
    encode,
    pauli_expectation,
    read_pauli_sum,
    write_pauli_sum,
)

_P = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]], dtype=complex),
      "Y": np.array([[0, -1j], [1j, 0]]),
      "Z": np.array([[1, 0], [0, -1]], dtype=complex)}


def _dense_from_string(string):
    # string character j acts on qubit j = bit 2^j (little-endian), so the
    # Kronecker product runs over the reversed string
    out = np.array([[1.0 + 0j]])
    for ch in reversed(string):
        out = np.kron(out, _P[ch])
    return out


def _op_from_dense(m):
    n = m.shape[0]
    return SparseOperator.from_entries(
        n, [(i, j, m[i, j]) for i in range(n) for j in range(n)
            if m[i, j] != 0])


class TestHandWorkedEncodings:
    def test_number_operator_single_qubit(self):
        # n = |1><1| = (I - Z)/2
        _, _, n = truncated_ladder(2)
        h = encode(n, 1)
        terms = {string: coeff for coeff, string in h.terms}
        assert terms == {
            "I": pytest.approx(0.5), "Z": pytest.approx(-0.5)}

    def test_lowering_operator_single_qubit(self):
        # a = |0><1| = (X + iY)/2
        a, _, _ = truncated_ladder(2)
        h = encode(a, 1)
        terms = {string: coeff for coeff, string in h.terms}
        assert terms["X"] == pytest.approx(0.5)
        assert terms["Y"] == pytest.approx(0.5j)

    def test_identity(self):
        h = encode(SparseOperator.identity(4), 2)
        assert h.terms == ((1.0, "II"),)

    def test_little_endian_convention(self):
        # matrix-index bit 2^0 belongs to string character 0
        m = np.kron(_P["Z"], np.eye(2))    # Z on the high bit = qubit 1
        h = encode(_op_from_dense(m), 2)
        assert h.terms == ((1.0, "IZ"),)


class TestRoundTrip:
    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_encode_decode_random_hermitian(self, seed):
        rng = np.random.default_rng(seed)
        m = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        m = 0.5 * (m + m.conj().T)
        h = encode(_op_from_dense(m), 3)
        assert h.hermitian
        np.testing.assert_allclose(decode(h), m, atol=1e-12)

    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_encode_decode_non_hermitian(self, seed):
        rng = np.random.default_rng(seed)
        m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        h = encode(_op_from_dense(m), 2)
        np.testing.assert_allclose(decode(h), m, atol=1e-12)

    def test_decode_matches_kron_oracle(self, rng):
        h = PauliSum.from_terms(3, [(0.3, "XYZ"), (-1.2j, "ZIX")],
                                hermitian=False)
        expected = 0.3 * _dense_from_string("XYZ") \
            - 1.2j * _dense_from_string("ZIX")
        np.testing.assert_allclose(decode(h), expected, atol=1e-14)

    def test_non_power_of_two_rejected(self):
        with pytest.raises(NonPowerOfTwoDimension):
            encode(SparseOperator.identity(3), 2)


class TestApplyAndExpectation:
    @given(string=st.text(alphabet="IXYZ", min_size=3, max_size=3))
    def test_apply_pauli_matches_dense(self, string):
        rng = np.random.default_rng(7)
        psi = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        np.testing.assert_allclose(apply_pauli(string, psi),
                                   _dense_from_string(string) @ psi,
                                   atol=1e-13)

    def test_expectation_matches_dense(self, rng):
        p = BosonicParams(N=2, lam=0.2, cutoff=2)
        op = build_bosonic_hamiltonian(p)
        h = encode(op, 6)
        dense = op.to_dense()
        for _ in range(10):
            psi = rng.standard_normal(64) + 1j * rng.standard_normal(64)
            psi /= np.linalg.norm(psi)
            assert pauli_expectation(h, psi) == pytest.approx(
                np.real(np.vdot(psi, dense @ psi)), abs=1e-12)


class TestPauliSumContainer:
    def test_merges_and_drops_zeros(self):
        h = PauliSum.from_terms(
            1, [(1.0, "X"), (2.0, "X"), (1e-20, "Z")], hermitian=False)
        assert h.terms == ((3.0, "X"),)

    def test_add_and_scale(self):
        a = PauliSum.from_terms(1, [(1.0, "X")], hermitian=True)
        b = PauliSum.from_terms(1, [(0.5, "X"), (1.0, "Z")], hermitian=True)
        np.testing.assert_allclose(decode(a + b),
                                   decode(a) + decode(b), atol=1e-14)
        np.testing.assert_allclose(decode(a.scaled(2.0)), 2 * decode(a),
                                   atol=1e-14)

    def test_text_round_trip_exact(self, tmp_path):
        p = BosonicParams(N=2, lam=0.7, cutoff=2)
        h = encode(build_bosonic_hamiltonian(p), 6)
        path = tmp_path / "h.txt"
        write_pauli_sum(h, path)
        assert read_pauli_sum(path) == h
