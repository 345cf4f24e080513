import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from twistlab import operators as ops
from twistlab.errors import NonHermitian, OutOfRange, SingularFunction, SingularOperator


def random_hermitian(rng, n, scale=1.0):
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (X + X.conj().T) / 2


def test_eig_hermitian_diagonal_and_swap():
    assert np.allclose(ops.eig_hermitian(np.diag([3.0, -1.0])).eigenvalues, [-1, 3])
    assert np.allclose(ops.eig_hermitian(np.array([[0, 1], [1, 0]])).eigenvalues, [-1, 1])


def test_eig_hermitian_reconstruction():
    rng = np.random.default_rng(0)
    H = random_hermitian(rng, 8)
    dec = ops.eig_hermitian(H)
    assert dec.reconstruction_error(H) <= 1e-12
    assert dec.gram_defect() <= 1e-12
    assert np.all(np.diff(dec.eigenvalues) >= 0)


def test_eig_rejects_nonhermitian():
    with pytest.raises(NonHermitian):
        ops.eig_hermitian(np.array([[0, 1], [0, 0]]))


def test_matrix_function_basic():
    assert np.allclose(ops.matrix_function(np.diag([-2.0, 3.0]), np.abs), np.diag([2, 3]))
    rng = np.random.default_rng(1)
    H = random_hermitian(rng, 5)
    assert np.allclose(ops.matrix_function(H, lambda x: np.ones_like(x)), np.eye(5))


def test_matrix_function_taylor_oracle():
    rng = np.random.default_rng(2)
    H = random_hermitian(rng, 6, scale=0.3)
    # exp(-H^2) by a 30-term Taylor series
    H2 = H @ H
    term = np.eye(6, dtype=complex)
    acc = term.copy()
    for k in range(1, 30):
        term = term @ (-H2) / k
        acc = acc + term
    got = ops.matrix_function(H, lambda x: np.exp(-(x**2)))
    assert np.max(np.abs(got - acc)) <= 1e-10


def test_matrix_function_kernel_policies():
    D = np.diag([0.0, 2.0])
    with pytest.raises(SingularFunction):
        ops.matrix_function(D, lambda x: 1.0 / x)
    assert np.allclose(ops.matrix_function(D, lambda x: 1.0 / x, "drop_modes"), np.diag([0, 0.5]))
    assert np.allclose(ops.matrix_function(D, lambda x: 1.0 / x, "plus_one"), np.diag([1, 0.5]))


def test_sign_op_examples():
    assert np.allclose(ops.sign_op(np.diag([-2.0, 3.0])), np.diag([-1, 1]))
    assert np.allclose(ops.sign_op(np.diag([0.0, 5.0]), "plus_one"), np.eye(2))
    with pytest.raises(SingularOperator):
        ops.sign_op(np.diag([0.0, 5.0]), "reject")


def test_sign_op_circle_truncation():
    N = 16
    n = np.arange(-N, N + 1)
    D = sp.diags(n.astype(float), format="csr")
    F = ops.sign_op(D)
    assert sp.issparse(F)
    assert np.array_equal(F.diagonal().real, np.sign(n))


def test_sign_op_identities_dense():
    rng = np.random.default_rng(3)
    for _ in range(10):
        D = random_hermitian(rng, 7)
        F = ops.sign_op(D)
        absD = ops.abs_op(D)
        assert np.max(np.abs(F @ F - np.eye(7))) <= 1e-10
        assert np.max(np.abs(F @ absD - D)) <= 1e-10
        assert np.max(np.abs(absD @ F - D)) <= 1e-10
        assert ops.hermitian_defect(F) <= 1e-10


def test_identity_map_recovers_H():
    rng = np.random.default_rng(4)
    for n in (1, 3, 9):
        H = random_hermitian(rng, n)
        assert np.linalg.norm(ops.matrix_function(H, lambda x: x) - H) <= 1e-12


def test_singular_partial_sums_examples():
    assert ops.singular_partial_sums(np.eye(4), 4) == pytest.approx(4)
    v = np.array([1.0, 2.0, 2.0]) / 3
    assert ops.singular_partial_sums(np.outer(v, v), 2) == pytest.approx(1)
    N = 20
    d = 1.0 / np.arange(1, N + 1)
    harmonic = sum(1.0 / k for k in range(1, 11))
    assert ops.singular_partial_sums(np.diag(d), 10) == pytest.approx(harmonic, abs=1e-12)
    with pytest.raises(OutOfRange):
        ops.singular_partial_sums(np.eye(3), 4)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_singular_partial_sums_monotone_subadditive(seed):
    rng = np.random.default_rng(seed)
    T = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    S = rng.normal(size=(6, 6))
    sums = [ops.singular_partial_sums(T, k) for k in range(1, 7)]
    assert all(b >= a - 1e-12 for a, b in zip(sums, sums[1:]))
    for k in range(1, 7):
        lhs = ops.singular_partial_sums(T + S, k)
        assert lhs <= ops.singular_partial_sums(T, k) + ops.singular_partial_sums(S, k) + 1e-10


def test_diagonal_in_eigenbasis_circle_order():
    n = np.arange(-3, 4).astype(float)
    D = np.diag(n)
    T = np.diag(np.arange(7.0))
    ev, diag = ops.diagonal_in_eigenbasis(T, D)
    assert np.allclose(ev, [1, 1, 2, 2, 3, 3])
    # basis order -3..3 has T-values 0..6; stable sort puts n=-1 (value 2) before n=1 (value 4)
    assert np.allclose(diag, [2, 4, 1, 5, 0, 6])


def test_abs_power_matches_elementwise():
    D = np.diag([-2.0, 0.0, 4.0])
    assert np.allclose(ops.abs_power(D, 0.5), np.diag([2**-0.5, 0, 0.5]))
    assert np.allclose(ops.inverse_op(D), np.diag([-0.5, 0, 0.25]))
    assert math.isclose(ops.op_norm(sp.diags([1.0, -3.0])), 3.0)
