import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twistlab.errors import DegreeMismatch, DegreeZero
from twistlab.homology import (
    Chain,
    Cochain,
    boundary_chain,
    chain_probe_norm,
    coboundary_cochain,
    connes_B,
    cyclicity_residual,
    is_cycle,
    multilinearity_residual,
    pairing,
    random_matrix_cochain,
    trace_cochain,
    zero_cochain,
)

DIM = 3
I = np.eye(DIM)


def unit_matrix(rng, d=DIM):
    X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return X / np.linalg.norm(X, 2)


def unit_cochain(rng, n, d=DIM):
    phi = random_matrix_cochain(rng, n, d)
    # rescale so values are O(1) on unit-norm inputs
    return (1.0 / (3.0 ** (n + 1))) * phi


def random_chain(rng, n, terms=3):
    return Chain(n, [(complex(rng.normal(), rng.normal()), tuple(unit_matrix(rng) for _ in range(n + 1))) for _ in range(terms)])


def test_boundary_examples():
    rng = np.random.default_rng(0)
    a0, a1 = unit_matrix(rng), unit_matrix(rng)
    bc = boundary_chain(Chain.single(a0, a1))
    assert bc.degree == 0
    total = sum(w * f[0] for w, f in bc.terms)
    assert np.allclose(total, a0 @ a1 - a1 @ a0)
    # commutative algebra: every 1-chain is a cycle
    d = [np.diag(rng.normal(size=3)) for _ in range(4)]
    c = Chain(1, [(1.0, (d[0], d[1])), (2.0, (d[2], d[3]))])
    assert is_cycle(c)
    with pytest.raises(DegreeZero):
        boundary_chain(Chain.single(a0))
    with pytest.raises(DegreeMismatch):
        Chain(2, [(1.0, (a0, a1))])


def test_b_squared_chains():
    rng = np.random.default_rng(1)
    for _ in range(50):
        c = random_chain(rng, 3)
        assert chain_probe_norm(boundary_chain(boundary_chain(c)), rng) <= 1e-10
    # the probe norm is not blind
    assert chain_probe_norm(random_chain(rng, 1), rng) > 1e-3


def test_trace_coboundary_zero():
    rng = np.random.default_rng(2)
    tr = trace_cochain(0)
    for _ in range(10):
        a, b = unit_matrix(rng), unit_matrix(rng)
        assert abs(coboundary_cochain(tr)(a, b)) <= 1e-12


@pytest.mark.parametrize("n", [0, 1, 2, 3, 4])
def test_homology_kernel(n):
    rng = np.random.default_rng(10 + n)
    worst = {"bb": 0.0, "BB": 0.0, "bB": 0.0, "adj": 0.0}
    for _ in range(50):
        phi = unit_cochain(rng, n)
        a = [unit_matrix(rng) for _ in range(n + 2)]
        worst["bb"] = max(worst["bb"], abs(coboundary_cochain(coboundary_cochain(phi))(*[unit_matrix(rng) for _ in range(n + 3)])))
        if n >= 2:
            worst["BB"] = max(worst["BB"], abs(connes_B(connes_B(phi, I), I)(*a[: n - 1])))
        if n >= 1:
            r = coboundary_cochain(connes_B(phi, I))(*a[: n + 1]) + connes_B(coboundary_cochain(phi), I)(*a[: n + 1])
            worst["bB"] = max(worst["bB"], abs(r))
        c = random_chain(rng, n + 1)
        worst["adj"] = max(worst["adj"], abs(pairing(coboundary_cochain(phi), c) - pairing(phi, boundary_chain(c))))
    assert max(worst.values()) <= 1e-10, worst


def test_B_is_not_trivially_zero():
    rng = np.random.default_rng(3)
    phi = unit_cochain(rng, 3)
    a = [unit_matrix(rng) for _ in range(3)]
    assert abs(connes_B(phi, I)(*a)) > 1e-3


def test_B_degree_one_unfolding():
    # n = 1: (B phi)(a0) = phi(1, a0) + phi(a0, 1) in this normalization
    rng = np.random.default_rng(4)
    phi = unit_cochain(rng, 1)
    a = unit_matrix(rng)
    assert connes_B(phi, I)(a) == pytest.approx(phi(I, a) + phi(a, I), abs=1e-14)
    with pytest.raises(DegreeZero):
        connes_B(trace_cochain(0), I)


def test_pairing_examples():
    rng = np.random.default_rng(5)
    c = random_chain(rng, 2)
    assert pairing(zero_cochain(2), c) == 0
    a = tuple(unit_matrix(rng) for _ in range(3))
    phi = unit_cochain(rng, 2)
    assert pairing(phi, Chain.single(*a, weight=2.0)) == pytest.approx(2 * phi(*a))
    with pytest.raises(DegreeMismatch):
        pairing(phi, random_chain(rng, 1))


def test_coboundary_vanishes_on_cycles():
    rng = np.random.default_rng(6)
    # boundaries are cycles
    for _ in range(10):
        z = boundary_chain(random_chain(rng, 3))
        assert is_cycle(z)
        psi = unit_cochain(rng, 1)
        assert abs(pairing(coboundary_cochain(psi), z)) <= 1e-9
    # a commutative 1-cycle paired with the coboundary of a 0-cochain
    d = [np.diag(rng.normal(size=3)) for _ in range(2)]
    c = Chain.single(*d)
    assert is_cycle(c)
    assert abs(pairing(coboundary_cochain(unit_cochain(rng, 0)), c)) <= 1e-9


def test_cyclicity():
    rng = np.random.default_rng(7)
    F = np.diag([1.0, -1.0, 1.0])
    phi = Cochain(1, lambda a0, a1: np.trace(a0 @ (F @ a1 - a1 @ F)), "Tr(a0[F,a1])")
    samples = [(unit_matrix(rng), unit_matrix(rng)) for _ in range(20)]
    assert cyclicity_residual(phi, samples) <= 1e-10
    assert cyclicity_residual(trace_cochain(1), samples) > 1e-2
    assert cyclicity_residual(unit_cochain(rng, 1), samples) > 1e-3


def test_multilinearity():
    rng = np.random.default_rng(8)
    phi = unit_cochain(rng, 2)
    samples = [tuple(unit_matrix(rng) for _ in range(3)) for _ in range(5)]
    assert multilinearity_residual(phi, samples, rng) <= 1e-10
    quad = Cochain(0, lambda a: np.trace(a @ a), "nonlinear")
    assert multilinearity_residual(quad, [(unit_matrix(rng),), (unit_matrix(rng),)], rng) > 1e-3


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 4))
def test_bB_property(seed, n):
    rng = np.random.default_rng(seed)
    phi = unit_cochain(rng, n)
    a = [unit_matrix(rng) for _ in range(n + 1)]
    r = coboundary_cochain(connes_B(phi, I))(*a) + connes_B(coboundary_cochain(phi), I)(*a)
    assert abs(r) <= 1e-10
