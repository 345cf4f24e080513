from fractions import Fraction

import numpy as np
import pytest

from twistlab.crossed import (
    CrossedContext,
    OneCocycle,
    cocycle_check,
    crossed_multiply,
    induced_automorphism,
    lifted_trace,
    q_laurent_context,
    twisted_derivation_s,
    twisted_derivation_suite,
)
from twistlab.errors import ChangeOfVariableFails, ContextMismatch, IncompatibleDerivation, NotACocycle
from twistlab.exact import GaussQ, LaurentPoly, Q


@pytest.fixture(scope="module")
def ctx():
    return q_laurent_context(Fraction(3, 2))


def t(k=1, c=1):
    return LaurentPoly.monomial(k, c)


def test_multiply_examples(ctx):
    a, b = t(2, 3), t(-1, GaussQ(1, 2))
    assert crossed_multiply(ctx.basis(a), ctx.basis(b)) == ctx.basis(a * b)
    one = LaurentPoly.const(1)
    assert ctx.basis(one, 1) * ctx.basis(one, -1) == ctx.one()
    # (t (x) g1)(t (x) g1) = (t.g1) t (x) g2 = q t^2 (x) g2
    assert ctx.basis(t(), 1) * ctx.basis(t(), 1) == ctx.basis(t(2, Fraction(3, 2)), 2)


def test_context_mismatch(ctx):
    other = q_laurent_context(Fraction(2))
    with pytest.raises(ContextMismatch):
        crossed_multiply(ctx.one(), other.one())


def test_cocycle_examples(ctx):
    pairs = [(m, n) for m in range(-3, 4) for n in range(-3, 4)]
    assert cocycle_check(ctx, pairs).details["pass_all"]
    trivial = CrossedContext(ctx.algebra, ctx.action, OneCocycle(j=lambda n: LaurentPoly.const(1)))
    assert cocycle_check(trivial, pairs).details["pass_all"]
    bad = CrossedContext(ctx.algebra, ctx.action, OneCocycle(j=lambda n: LaurentPoly.const(1 + n)))
    rep = cocycle_check(bad, pairs)
    assert not rep.details["pass_all"] and rep.residual > 0
    with pytest.raises(NotACocycle):
        induced_automorphism(bad, pairs)


def test_sigma_formula(ctx):
    sig = induced_automorphism(ctx, [(1, 2)])
    x = ctx.basis(t(3, 5), 2)
    assert sig(x) == ctx.basis(t(3, 5) * Fraction(4, 9), 2)
    trivial = CrossedContext(ctx.algebra, ctx.action, OneCocycle(j=lambda n: LaurentPoly.const(1), power=lambda n, s: LaurentPoly.const(1)))
    y = trivial.basis(t(3, 5), 2)
    assert trivial.sigma(y) == y


def test_delta_prime_formula(ctx):
    d = twisted_derivation_s(ctx, 1)
    a = t(3, 2) + t(-2, GaussQ(0, 1))
    assert d(ctx.basis(a)) == ctx.basis(a.derivative())
    # delta'(a (x) n) = q^-n a' (x) n
    assert d(ctx.basis(a, 2)) == ctx.basis(a.derivative() * Fraction(4, 9), 2)


def test_incompatible_derivation(ctx):
    bad = CrossedContext(ctx.algebra, ctx.action, ctx.cocycle, delta=lambda a: a.derivative() * t(1), tau=ctx.tau)
    samples = [(t(2), 1)]
    with pytest.raises(IncompatibleDerivation):
        twisted_derivation_s(bad, 1, samples)
    with pytest.raises(IncompatibleDerivation):
        twisted_derivation_s(ctx, Fraction(1, 2))


def test_lifted_trace(ctx):
    tp = lifted_trace(ctx, [(t(-1), 1), (t(2) + t(-1, 3), -2)])
    assert tp(ctx.basis(t(-1, 7), 1)) == 0
    assert tp(ctx.basis(t(-1, 7))) == GaussQ(7)
    bad = CrossedContext(ctx.algebra, ctx.action, ctx.cocycle, delta=ctx.delta, tau=lambda a: a.coeff(0))
    # coefficient of t^0 has no change of variable: tau((a.g) j(g)) = q^n a_0 != a_0
    with pytest.raises(ChangeOfVariableFails):
        lifted_trace(bad, [(LaurentPoly.const(1), 1)])


def test_exact_suite_is_identically_zero(ctx):
    rng = np.random.default_rng(11)
    recs = twisted_derivation_suite(ctx, rng, n_pairs=60)
    names = {r.name for r in recs}
    assert {"cocycle law", "sigma multiplicative", "twisted Leibniz", "sigma-trace", "tau' kills delta'", "change of variable"} <= names
    for r in recs:
        assert r.residual == 0.0, r.name
        assert r.passed


def test_action_associativity(ctx):
    a = t(3, 2) + t(-1, GaussQ(1, 1))
    assert ctx.action.act(ctx.action.act(a, 2), -5) == ctx.action.act(a, -3)
    assert ctx.action.act(a, 0) == a


def test_gauss_arithmetic():
    z = GaussQ(Fraction(1, 2), 3)
    assert z * z.inverse() == GaussQ(1)
    assert (z + 1) - 1 == z
    assert z.conj() * z == GaussQ(Fraction(1, 4) + 9)
    assert str(GaussQ(1, -2)) == "1-2i"
