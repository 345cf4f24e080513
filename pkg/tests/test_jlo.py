import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twistlab.characters import circle_untwisted_triple
from twistlab.errors import DegenerateFit, QuadratureNotConverged, RuleMissing
from twistlab.homology import zero_cochain
from twistlab.jlo import (
    DEFAULT_EPS,
    MultiIndex,
    SimplexRule,
    ansatz_twisted_cocycle,
    bB_residual,
    cm_coefficient,
    conical_rule,
    constant_term,
    eps_zero_limit,
    exp_divided_differences,
    grundmann_moller,
    jlo_bracket_eps,
    jlo_cochain_eps,
    jlo_family,
    local_cocycle_untwisted,
    multi_indices,
    nabla_iter,
    selberg_invariance_residual,
    twisted_jlo,
    twisted_jlo_adaptive,
)
from twistlab.triples import TwistedTriple, random_block_element, random_graded_triple, random_perturbed_triple


def test_cm_coefficient_examples():
    assert cm_coefficient(1, (0,)) == pytest.approx(np.sqrt(2j) * np.sqrt(np.pi))
    assert cm_coefficient(1, (1,)) == pytest.approx(-np.sqrt(2j) * 0.5 * math.gamma(1.5))
    for k in [(1, 0, 2), (0, 0, 1), (2, 2, 0)]:
        r = cm_coefficient(3, k) / cm_coefficient(3, (0, 0, 0))
        assert abs(r.imag) < 1e-14 and np.sign(r.real) == (-1) ** sum(k)
    with pytest.raises(ValueError):
        cm_coefficient(2, (0, 0))


def test_multi_indices():
    ks = list(multi_indices(3, 2))
    assert len(ks) == 6 and all(k.total == 2 for k in ks)
    with pytest.raises(ValueError):
        MultiIndex((1, -1))


def test_nabla():
    rng = np.random.default_rng(0)
    H = rng.normal(size=(5, 5))
    D = H + H.T
    T = rng.normal(size=(5, 5))
    assert np.allclose(nabla_iter(D, np.eye(5), 1), 0)
    assert np.allclose(nabla_iter(D, D, 1), 0, atol=1e-12)
    D2 = D @ D
    assert np.allclose(nabla_iter(D, T, 2), D2 @ D2 @ T - 2 * D2 @ T @ D2 + T @ D2 @ D2, atol=1e-10)
    assert np.array_equal(nabla_iter(D, T, 0), T)


def _mp_simplex_exp(r):
    mp.mp.dps = 40
    M = mp.matrix(len(r))
    for i, v in enumerate(r):
        M[i, i] = -v
    for i in range(len(r) - 1):
        M[i, i + 1] = 1
    return float(mp.expm(M)[0, len(r) - 1])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 4), st.sampled_from(["spread", "equal", "near"]))
def test_divided_differences_oracle(seed, q, mode):
    rng = np.random.default_rng(seed)
    r = rng.uniform(0, 20, size=q + 1)
    if mode == "equal":
        r[1:] = r[0]
    elif mode == "near":
        r[:2] = r[0] + 1e-9 * rng.normal(size=2)
    v = exp_divided_differences(r[None, :])[0]
    ref = _mp_simplex_exp(r)
    assert abs(v - ref) <= 1e-13 * abs(ref)


@pytest.mark.parametrize("q", [1, 2, 3, 4])
def test_rules_integrate_volume(q):
    for nodes, w in (grundmann_moller(q, 3), conical_rule(q, 5)):
        assert w.sum() == pytest.approx(1 / math.factorial(q), rel=1e-13)
        assert np.allclose(nodes.sum(axis=1), 1)
    # conical rule is exact for monomials of degree <= 2m - 1
    nodes, w = conical_rule(q, 4)
    exact = math.factorial(3) * math.factorial(2) / math.factorial(q + 5)
    assert np.sum(w * nodes[:, 0] ** 3 * nodes[:, -1] ** 2) == pytest.approx(exact, rel=1e-12)


@pytest.fixture(scope="module")
def graded():
    rng = np.random.default_rng(1)
    t = random_graded_triple(rng, 3)
    els = [random_block_element(rng, 3) / 3 for _ in range(6)]
    return t, els


def test_bracket_q0_eigen_oracle(graded):
    t, els = graded
    mu = 1.7
    w, V = np.linalg.eigh(t.D)
    ref = np.trace(t.grading @ els[0] @ V @ np.diag(np.exp(-mu**2 * w**2)) @ V.conj().T)
    assert abs(twisted_jlo(t, [els[0]], mus=[mu]) - ref) <= 1e-12


def test_bracket_D_zero():
    rng = np.random.default_rng(2)
    X = [rng.normal(size=(4, 4)) for _ in range(4)]
    t = TwistedTriple(generators={}, D=np.zeros((4, 4)))
    assert twisted_jlo(t, X) == pytest.approx(np.trace(X[0] @ X[1] @ X[2] @ X[3]) / 6, abs=1e-13)


@pytest.mark.parametrize("q", [1, 2, 3])
def test_exact_vs_quadrature(graded, q):
    t, els = graded
    ent = [els[0]] + [t.D @ x - x @ t.D for x in els[1:q + 1]]
    mus = [1.0] + [0.8] * q
    ex = twisted_jlo(t, ent, mus)
    ad, change = twisted_jlo_adaptive(t, ent, mus, tol=1e-12)
    assert abs(ex - ad) <= 1e-10 * max(1, abs(ex))
    assert abs(twisted_jlo(t, ent, mus, SimplexRule("gm", 8)) - ex) <= 1e-4


def test_quadrature_not_converged():
    D = np.diag([0.0, 0.0, 9.0, 9.0])
    X = np.ones((4, 4))
    t = TwistedTriple(generators={}, D=D)
    with pytest.raises(QuadratureNotConverged):
        twisted_jlo_adaptive(t, [X, X, X], tol=1e-14, m0=2, m_max=4)
    v, _ = twisted_jlo_adaptive(t, [X, X, X], tol=1e-12)
    assert v == pytest.approx(twisted_jlo(t, [X, X, X]), rel=1e-11)


@pytest.mark.parametrize("q", [1, 3])
def test_classical_jlo_bB(graded, q):
    t, els = graded
    rng = np.random.default_rng(q)
    samples = [[random_block_element(rng, 3) / 3 for _ in range(q + 1)] for _ in range(3)]
    assert bB_residual(jlo_family(t), q, samples, np.eye(6)) <= 1e-8
    assert bB_residual(lambda k: zero_cochain(k), q, samples, np.eye(6)) == 0


def test_jlo_eps_identities(graded):
    t, els = graded
    a = els[:3]
    assert jlo_cochain_eps(t, 2, a, 1.0) == pytest.approx(twisted_jlo(t, [a[0]] + [t.D @ x - x @ t.D for x in a[1:]]))
    # homogeneity: D -> eps^{1/2} D in every slot
    e = 0.3
    Ds = np.sqrt(e) * t.D
    ts = TwistedTriple(generators={}, D=Ds, grading=t.grading)
    lhs = jlo_cochain_eps(t, 2, a, e)
    rhs = twisted_jlo(ts, [a[0]] + [Ds @ x - x @ Ds for x in a[1:]])
    assert lhs == pytest.approx(rhs, rel=1e-12)


@pytest.mark.parametrize("q", [0, 1, 2, 3])
def test_constant_term_finite(q):
    rng = np.random.default_rng(10 + q)
    t = random_perturbed_triple(rng, 3)
    a = [random_block_element(rng, 3) / 3 for _ in range(q + 1)]
    fit = constant_term(lambda e: jlo_bracket_eps(t, q, a, e), DEFAULT_EPS)
    assert fit.reliable
    assert abs(fit.constant - eps_zero_limit(t, q, a)) <= 1e-6
    ex = tuple(q / 2 + k for k in range(0 if q else 1, 5))
    fitJ = constant_term(lambda e: jlo_cochain_eps(t, q, a, e), DEFAULT_EPS, exponents=ex)
    direct = eps_zero_limit(t, 0, a[:1]) if q == 0 else 0.0
    assert abs(fitJ.constant - direct) <= 1e-6


def test_constant_term_synthetic():
    eps = np.geomspace(1e-1, 1e-5, 8)
    fit = constant_term(eps**-0.5 + 3, eps, exponents=(-0.5,))
    assert fit.constant == pytest.approx(3, abs=1e-6) and abs(fit.coefficients[0] - 1) < 1e-9
    flat = constant_term(np.full(8, 2.5), eps, exponents=(1, 2))
    assert flat.constant == pytest.approx(2.5) and max(abs(c) for c in flat.coefficients) < 1e-9
    with pytest.raises(DegenerateFit):
        constant_term(np.ones(5), eps[:5])
    with pytest.raises(DegenerateFit):
        constant_term(np.ones(8), eps, exponents=(1, 1))
    with pytest.raises(DegenerateFit):
        constant_term(np.ones(8), np.linspace(0.1, 0.8, 8))


def test_local_cocycle_circle():
    t, fm = circle_untwisted_triple(256)
    for m in (1, 2):
        v = local_cocycle_untwisted(t, 1, (fm.monomial(-m), fm.monomial(m)))
        assert v == pytest.approx(cm_coefficient(1, (0,)) * 2 * m, rel=1e-6)
    one = fm.monomial(0)
    assert abs(local_cocycle_untwisted(t, 1, (one, one))) <= 1e-12


def test_ansatz():
    t, fm = circle_untwisted_triple(128)
    a = (fm.monomial(-1), fm.monomial(1))
    r = ansatz_twisted_cocycle(t, 1, a)
    assert r["status"] == "EXPERIMENTAL"
    assert r["value"] == pytest.approx(local_cocycle_untwisted(t, 1, a), rel=1e-6)
    with pytest.raises(RuleMissing):
        ansatz_twisted_cocycle(t, 1, a, max_total=1)
    r1 = ansatz_twisted_cocycle(t, 1, a, rule=lambda D, x, k: nabla_iter(D, D @ x - x @ D, k), max_total=1)
    assert r1["value"] == pytest.approx(r["value"], rel=1e-6)


def test_selberg_identity_twist():
    t, fm = circle_untwisted_triple(256)
    P = fm.monomial(-1) @ (t.D @ fm.monomial(1) - fm.monomial(1) @ t.D)
    from twistlab.operators import abs_power

    P = P @ abs_power(t.D, 1, "drop_modes")
    assert selberg_invariance_residual(P, P, t.D) == 0
