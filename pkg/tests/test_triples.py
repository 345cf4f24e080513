import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twistlab.algebra import identity_automorphism, inner_automorphism
from twistlab.errors import (
    DimensionMismatch,
    NonCommutativeAlgebra,
    NonHermitianPerturbation,
    ScalingDefectTooLarge,
    ZeroOperator,
)
from twistlab.operators import abs_op
from twistlab.triples import (
    TwistedTriple,
    brute_force_distance,
    commutative_triple,
    conformal_perturb,
    generate_scaling_group,
    geometric_shift_model,
    lipschitz_commutator,
    random_even_hermitian,
    random_graded_triple,
    random_hermitian,
    scaling_check,
    scaling_crossed_triple,
    spectral_distance,
    twisted_commutator,
    twisted_leibniz_residual,
    two_point_triple,
    validate_triple,
)


def test_twisted_commutator_examples():
    rng = np.random.default_rng(0)
    D = random_hermitian(rng, 4)
    a = rng.normal(size=(4, 4))
    assert np.allclose(twisted_commutator(D, a), D @ a - a @ D)
    Dd, ad = np.diag([1.0, 2.0, 3.0]), np.diag([4.0, 5.0, 6.0])
    assert np.allclose(twisted_commutator(Dd, ad), 0)
    with pytest.raises(DimensionMismatch):
        twisted_commutator(D, np.eye(3))


def test_lipschitz_examples():
    rng = np.random.default_rng(1)
    D = random_hermitian(rng, 4)
    assert np.allclose(lipschitz_commutator(D, np.eye(4)), 0)
    P = D @ D + np.eye(4)
    a = rng.normal(size=(4, 4))
    sig = inner_automorphism(np.diag([1, 2, 3, 4.0]))
    assert np.allclose(lipschitz_commutator(P, a, sig), twisted_commutator(P, a, sig))


def test_twisted_leibniz_random():
    rng = np.random.default_rng(2)
    t = conformal_perturb(random_graded_triple(rng, 4), random_even_hermitian(rng, 4))
    for _ in range(100):
        a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        b = rng.normal(size=(8, 8))
        assert twisted_leibniz_residual(t, a, b) <= 1e-10 * 100


def test_validate_untwisted_and_broken():
    rng = np.random.default_rng(3)
    t = random_graded_triple(rng, 4)
    recs = validate_triple(t)
    assert all(r.passed for r in recs)
    assert max(r.residual for r in recs) <= 1e-12
    broken = TwistedTriple(generators=t.generators, D=t.D, grading=np.eye(8))
    bad = {r.name: r for r in validate_triple(broken)}
    assert not bad["grading odd D"].passed


def test_conformal_perturb():
    rng = np.random.default_rng(4)
    t = random_graded_triple(rng, 4)
    same = conformal_perturb(t, np.zeros((8, 8)))
    assert np.allclose(same.D, t.D)
    a = t.generators["a0"]
    assert np.allclose(same.sigma(a), a)
    h = random_even_hermitian(rng, 4)
    tp = conformal_perturb(t, h)
    assert tp.truncation_meta["conformal_certificate"] <= 1e-9
    assert all(r.passed for r in validate_triple(tp, tol=1e-9))
    # a commuting with h and sigma = id -> sigma'(a) = a
    f = np.diag(np.diagonal(h)).real
    tf = conformal_perturb(t, f)
    c = np.diag(rng.normal(size=8))
    assert np.allclose(tf.sigma(c), c)
    back = conformal_perturb(tp, -h)
    assert np.max(np.abs(back.D - t.D)) <= 1e-9
    with pytest.raises(NonHermitianPerturbation):
        conformal_perturb(t, np.triu(np.ones((8, 8))))


def test_scaling_check_examples():
    rng = np.random.default_rng(5)
    t = random_graded_triple(rng, 3)
    r = scaling_check(np.eye(6), t.D)
    assert r.mu == pytest.approx(1) and r.defect == 0 and r.accepted
    r = scaling_check(t.grading, t.D)
    assert not r.accepted
    with pytest.raises(ZeroOperator):
        scaling_check(np.eye(3), np.zeros((3, 3)))


def test_geometric_shift_defect():
    q = 1.5
    D, U = geometric_shift_model(20, q)
    full = scaling_check(U, D)
    assert full.defect > 1e-2 and not full.accepted
    inner = scaling_check(U, D, window=slice(0, 18))
    assert inner.mu == pytest.approx(q) and inner.defect <= 1e-12


def test_scaling_crossed_triple():
    rng = np.random.default_rng(6)
    t = random_graded_triple(rng, 3)
    Gtriv = generate_scaling_group([], t.D)
    tri, ctx = scaling_crossed_triple(t, Gtriv)
    x = tri.generators["a0U0"]
    assert np.allclose(tri.rep(tri.sigma(x)), tri.rep(x))
    # mu = 1 group: unitaries commuting with D (functions of D)
    w, v = np.linalg.eigh(t.D)
    V = v @ np.diag(np.exp(1j * rng.normal(size=6))) @ v.conj().T
    W = v @ np.diag(np.sign(w)) @ v.conj().T
    G = generate_scaling_group([W], t.D)
    assert G.size == 2 and G.mu_character_defect() <= 1e-12
    tri, ctx = scaling_crossed_triple(t, G)
    assert tri.truncation_meta["crossed_commutator_certificate"] <= 1e-10
    for name, x in tri.generators.items():
        assert np.allclose(tri.rep(tri.sigma(x)), tri.rep(x))
    recs = validate_triple(tri, tol=1e-9)
    assert all(r.passed for r in recs if not r.name.startswith("grading"))
    with pytest.raises(ScalingDefectTooLarge):
        scaling_crossed_triple(t, generate_scaling_group([t.grading], t.D))
    # random products: sigma multiplicative on the crossed algebra
    for _ in range(20):
        a = ctx.random_element(rng, 2)
        b = ctx.random_element(rng, 2)
        assert ctx.distance(tri.sigma(a * b), tri.sigma(a) * tri.sigma(b)) <= 1e-10 * 100
        assert np.allclose(tri.rep(a * b), tri.rep(a) @ tri.rep(b))
    del V


@pytest.mark.parametrize("lam", [0.5, 1.0, 4.0])
def test_two_point_distance(lam):
    t = two_point_triple(lam)
    d = spectral_distance(t, 0, 1)
    assert abs(d.distance - 1 / lam) <= 1e-6
    assert abs(brute_force_distance(t.D, 0, 1) - 1 / lam) <= 1e-9
    assert spectral_distance(t, 1, 1).distance == 0


def test_distance_symmetric_and_oracle():
    rng = np.random.default_rng(7)
    for _ in range(5):
        X = rng.normal(size=(3, 3))
        D = X + X.T
        t = commutative_triple(D)
        d01 = spectral_distance(t, 0, 1).distance
        d10 = spectral_distance(t, 1, 0).distance
        assert d01 == pytest.approx(d10, rel=1e-6)
        assert d01 == pytest.approx(brute_force_distance(D, 0, 1), rel=1e-6)


def test_distance_rejects_noncommutative():
    t = TwistedTriple(generators={"a": np.ones((2, 2))}, D=np.eye(2))
    with pytest.raises(NonCommutativeAlgebra):
        spectral_distance(t, 0, 1)


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=-3, max_value=3))
def test_distance_shift_invariance(c):
    # [D, f + c] = [D, f]: objective and constraint unchanged
    rng = np.random.default_rng(8)
    X = rng.normal(size=(3, 3))
    D = X + X.T
    f = rng.normal(size=3)
    C1 = D * f[None, :] - f[:, None] * D
    g = f + c
    C2 = D * g[None, :] - g[:, None] * D
    assert np.allclose(C1, C2)
    assert (f[0] - f[1]) == pytest.approx(g[0] - g[1])
