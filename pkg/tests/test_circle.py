import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twistlab.circle import (
    DiffeoGroup,
    FourierModel,
    SampledCircle,
    beta_diffeo,
    circle_crossed,
    rotation,
    twisted_connection_check,
)
from twistlab.crossed import twisted_derivation_suite
from twistlab.errors import NotADiffeo


@pytest.fixture(scope="module")
def sc():
    return circle_crossed(128, 1024)


def test_fourier_model_shift_algebra():
    fm = FourierModel(10)
    u, us = fm.monomial(1), fm.monomial(-1)
    P = (us @ u).toarray()
    # u* u = 1 except where the shift leaves the truncation
    assert np.allclose(np.diag(P)[:-1], 1) and P[-1, -1] == 0
    assert np.allclose((fm.monomial(2) @ fm.monomial(3)).toarray()[5:, :-5], fm.monomial(5).toarray()[5:, :-5])
    D = fm.D().toarray()
    assert np.allclose(np.diag(D), np.arange(-10, 11))
    x = 2 * np.pi * np.arange(64) / 64
    dense = fm.from_samples(np.exp(1j * x))
    assert np.allclose(dense, u.toarray())


def test_diffeo_basics():
    phi = beta_diffeo(0.3)
    x = np.linspace(0, 1, 101)
    assert np.max(np.abs(phi.finv(phi.f(x)) - x)) <= 1e-14
    assert np.all(phi.df(x) > 0)
    with pytest.raises(NotADiffeo):
        beta_diffeo(1.0)
    ident = beta_diffeo(0.0)
    assert np.allclose(ident.f(x), x) and np.allclose(ident.df(x), 1)


def test_group_words():
    G = DiffeoGroup([beta_diffeo(0.3), rotation(0.2)])
    p, r = G.generator("phi"), G.generator("rot")
    g = G.compose(p, r)
    assert G.compose(g, G.inverse(g)) == ()
    x = np.linspace(0, 1, 17)
    y, dy = G.evaluate(g, x)
    phi = beta_diffeo(0.3)
    assert np.allclose(y, phi.f(x + 0.2)) and np.allclose(dy, phi.df(x + 0.2))
    yi, dyi = G.evaluate(G.inverse(g), y)
    assert np.allclose(yi, x) and np.allclose(dyi * dy, 1)


def test_sampled_interpolation_exact_on_trig():
    grid = SampledCircle(64)
    f = grid.trig({3: 1.0, -2: 0.5j})
    y = np.random.default_rng(0).random(20)
    exact = np.exp(2j * np.pi * 3 * y) + 0.5j * np.exp(-2j * np.pi * 2 * y)
    assert np.allclose(grid.evaluate(f, y), exact, atol=1e-13)
    assert np.allclose(grid.derivative(f), grid.trig({3: 6j * np.pi, -2: 0.5j * (-4j * np.pi)}))


def test_beta_zero_trivial():
    s0 = circle_crossed(16, 128, beta=0.0)
    R = s0.rho(s0.phi(), 16)
    assert np.allclose(R, np.eye(33), atol=1e-13)
    assert np.allclose(s0.ctx.cocycle.j(s0.phi()), 1)


def test_unitarity_and_covariance(sc):
    assert sc.unitarity_defect() <= 1e-10
    rng = np.random.default_rng(1)
    for deg in (1, 4, 8):
        f = sc.grid.random(rng, deg)
        for g in (sc.phi(), sc.phi(-1), sc.group.compose(sc.phi(), (("rot", 1),))):
            assert sc.covariance_residual(f, g) <= 1e-8


def test_circle_derivation_suite(sc):
    rng = np.random.default_rng(2)
    recs = twisted_derivation_suite(sc.ctx, rng, n_pairs=30, s=0.5, tol=1e-8)
    for r in recs:
        assert r.passed, (r.name, r.residual)


def test_twisted_commutator_oracle(sc):
    rng = np.random.default_rng(3)
    f = sc.grid.random(rng, 3)
    x = sc.ctx.basis(f, sc.phi(-1))
    A = sc.twisted_commutator(x, 64)
    B = sc.twisted_commutator_oracle(f, 64)
    assert np.max(np.abs(A - B)) <= 1e-9 * max(1.0, np.max(np.abs(A)))
    # untwisted commutator is much larger (unbounded part f (phi'-1) U D)
    assert np.linalg.norm(sc.commutator(x, 64), 2) > 5 * np.linalg.norm(A, 2)


def test_twisted_connection(sc):
    rot = (("rot", 1),)
    # rotations: j = 1 and the condition is D rho = rho D
    assert sc.twisted_connection_residual(rot, N=16) <= 1e-12
    assert sc.twisted_connection_residual((), N=16) <= 1e-12
    res = [sc.twisted_connection_residual(sc.phi(-1), N=N) for N in (12, 16, 24, 48)]
    assert res[-1] <= 1e-10
    assert all(b <= a * 1.01 + 1e-14 for a, b in zip(res, res[1:]))
    # wrong s breaks it
    assert sc.twisted_connection_residual(sc.phi(-1), s=1.0, N=48) > 1e-3
    recs = twisted_connection_check(sc, N=64)
    assert all(r.passed for r in recs)


@settings(max_examples=10, deadline=None)
@given(st.floats(min_value=-0.9, max_value=0.9))
def test_newton_inverse_property(beta):
    phi = beta_diffeo(beta)
    y = np.linspace(-1, 2, 61)
    x = phi.finv(y)
    assert np.max(np.abs(phi.f(x) - y)) <= 1e-13
