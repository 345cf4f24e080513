"""Crossed products by a right group action, 1-cocycles and the induced twists.

Conventions: the group acts on the right, ``a -> a.g``; the crossed product
multiplies as ``(a (x) g)(b (x) h) = (a.h) b (x) gh``. A 1-cocycle ``j`` takes
values in central invertible elements and satisfies ``j(gh) = (j(g).h) j(h)``.
From such data:

* ``sigma(a (x) g) = (j(g^-1).g) a (x) g`` is an automorphism,
* ``delta'_s(a (x) g) = (delta((a.g^-1) J^s) J^-s (x) 1)(1 (x) g)`` with
  ``J = j(g^-1)`` is a sigma-derivation when ``delta`` is compatible with ``j``,
* ``tau'(a (x) g) = tau(a)`` if ``g = e`` and ``0`` otherwise is a sigma-trace
  when ``tau`` has the change-of-variable property.

The canonical exact instance is the q-Laurent scenario: Laurent polynomials in
``t`` with Gaussian-rational coefficients, ``Z`` acting by ``t -> q^n t``.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable

import numpy as np

from .algebra import Automorphism
from .errors import ChangeOfVariableFails, ContextMismatch, IncompatibleDerivation, NotACocycle
from .exact import GaussQ, LaurentPoly, Q, qpow
from .report import check


@dataclass(frozen=True)
class CoefficientAlgebra:
    """Operations on coefficient elements (which support ``+ - *`` natively)."""

    label: str
    one: Any
    zero: Any
    exact: bool
    is_zero: Callable[[Any], bool]
    distance: Callable[[Any, Any], float]
    star: Callable[[Any], Any] | None = None
    is_central: Callable[[Any], bool] | None = None
    is_invertible: Callable[[Any], bool] | None = None
    random: Callable[[np.random.Generator], Any] | None = None
    mul: Callable[[Any, Any], Any] = operator.mul


@dataclass(frozen=True)
class GroupAction:
    """Group with a right action ``act(a, g) = a.g`` on coefficients."""

    label: str
    identity: Hashable
    compose: Callable[[Hashable, Hashable], Hashable]
    inverse: Callable[[Hashable], Hashable]
    act: Callable[[Any, Hashable], Any]
    random: Callable[[np.random.Generator], Hashable] | None = None


@dataclass(frozen=True)
class OneCocycle:
    """``j`` plus a closed-form rule for ``(j g)^s``; ``power(g, s)`` may raise ValueError."""

    j: Callable[[Hashable], Any]
    power: Callable[[Hashable, float], Any] | None = None
    label: str = "j"


class CrossedContext:
    """Bundle of algebra, action, cocycle, derivation and trace for one crossed product."""

    def __init__(self, algebra: CoefficientAlgebra, action: GroupAction, cocycle: OneCocycle | None = None,
                 delta: Callable[[Any], Any] | None = None, tau: Callable[[Any], Any] | None = None, label: str = ""):
        self.algebra = algebra
        self.action = action
        self.cocycle = cocycle
        self.delta = delta
        self.tau = tau
        self.label = label or f"{algebra.label} x| {action.label}"
        self._sigma_coeff: dict = {}
        self._power_cache: dict = {}

    # -- constructors
    def element(self, support: dict) -> "CrossedElement":
        return CrossedElement(self, support)

    def basis(self, a, g=None) -> "CrossedElement":
        return CrossedElement(self, {self.action.identity if g is None else g: a})

    def one(self) -> "CrossedElement":
        return self.basis(self.algebra.one)

    def zero(self) -> "CrossedElement":
        return CrossedElement(self, {})

    # -- cocycle helpers
    def _power(self, g, s):
        key = (g, s)
        v = self._power_cache.get(key)
        if v is None:
            if s == 1:
                v = self.cocycle.j(g)
            elif self.cocycle.power is None:
                raise ValueError(f"no s-power rule for s={s}")
            else:
                v = self.cocycle.power(g, s)
            self._power_cache[key] = v
        return v

    def sigma_weight(self, g, inverse: bool = False):
        """``(j(g^-1)).g``, or its inverse."""
        key = (g, inverse)
        w = self._sigma_coeff.get(key)
        if w is None:
            ginv = self.action.inverse(g)
            w = self.action.act(self._power(ginv, -1 if inverse else 1), g)
            self._sigma_coeff[key] = w
        return w

    # -- crossed product operations
    def multiply(self, x: "CrossedElement", y: "CrossedElement") -> "CrossedElement":
        if x.ctx is not self or y.ctx is not self:
            raise ContextMismatch("elements belong to different crossed contexts")
        act, compose, mul = self.action.act, self.action.compose, self.algebra.mul
        out: dict = {}
        for g, a in x.support.items():
            for h, b in y.support.items():
                c = mul(act(a, h), b)
                k = compose(g, h)
                prev = out.get(k)
                out[k] = c if prev is None else prev + c
        return CrossedElement(self, out)

    def sigma(self, x: "CrossedElement") -> "CrossedElement":
        mul = self.algebra.mul
        return CrossedElement(self, {g: mul(self.sigma_weight(g), a) for g, a in x.support.items()})

    def sigma_inv(self, x: "CrossedElement") -> "CrossedElement":
        mul = self.algebra.mul
        return CrossedElement(self, {g: mul(self.sigma_weight(g, True), a) for g, a in x.support.items()})

    def automorphism(self) -> Automorphism:
        return Automorphism(self.sigma, self.sigma_inv, label="sigma_j")

    def delta_s(self, x: "CrossedElement", s=1) -> "CrossedElement":
        act, inv, mul = self.action.act, self.action.inverse, self.algebra.mul
        out: dict = {}
        for g, a in x.support.items():
            ginv = inv(g)
            b = mul(self.delta(mul(act(a, ginv), self._power(ginv, s))), self._power(ginv, -s))
            c = act(b, g)
            prev = out.get(g)
            out[g] = c if prev is None else prev + c
        return CrossedElement(self, out)

    def tau_prime(self, x: "CrossedElement"):
        a = x.support.get(self.action.identity)
        if a is None:
            return self.tau(self.algebra.zero)
        return self.tau(a)

    def distance(self, x: "CrossedElement", y: "CrossedElement") -> float:
        keys = set(x.support) | set(y.support)
        z = self.algebra.zero
        return max((self.algebra.distance(x.support.get(k, z), y.support.get(k, z)) for k in keys), default=0.0)

    def random_element(self, rng, terms: int = 2) -> "CrossedElement":
        out: dict = {}
        for _ in range(terms):
            g = self.action.random(rng)
            a = self.algebra.random(rng)
            out[g] = out[g] + a if g in out else a
        return CrossedElement(self, out)


class CrossedElement:
    """Finite sum ``sum_g a_g (x) g``; zero coefficients are pruned."""

    __slots__ = ("ctx", "support")

    def __init__(self, ctx: CrossedContext, support: dict):
        self.ctx = ctx
        z = ctx.algebra.is_zero
        self.support = {g: a for g, a in support.items() if not z(a)}

    def _check(self, o):
        if not isinstance(o, CrossedElement) or o.ctx is not self.ctx:
            raise ContextMismatch("elements belong to different crossed contexts")

    def __add__(self, o):
        self._check(o)
        out = dict(self.support)
        for g, a in o.support.items():
            out[g] = out[g] + a if g in out else a
        return CrossedElement(self.ctx, out)

    def __neg__(self):
        return CrossedElement(self.ctx, {g: -a for g, a in self.support.items()})

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o):
        if isinstance(o, CrossedElement):
            return self.ctx.multiply(self, o)
        return CrossedElement(self.ctx, {g: a * o for g, a in self.support.items()})

    def __rmul__(self, c):
        return CrossedElement(self.ctx, {g: c * a for g, a in self.support.items()})

    def is_zero(self) -> bool:
        return not self.support

    def __eq__(self, o):
        if not isinstance(o, CrossedElement):
            return NotImplemented
        return self.ctx is o.ctx and self.ctx.distance(self, o) == 0

    __hash__ = None

    def __repr__(self):
        if not self.support:
            return "0"
        return " + ".join(f"[{a!r}](x)g{g}" for g, a in self.support.items())


def crossed_multiply(x: CrossedElement, y: CrossedElement) -> CrossedElement:
    if x.ctx is not y.ctx:
        raise ContextMismatch("elements belong to different crossed contexts")
    return x.ctx.multiply(x, y)


# ---------------------------------------------------------------- checks


def cocycle_check(ctx: CrossedContext, pairs: Iterable[tuple], tol: float = 0.0):
    """Residuals of ``j(gh) = (j(g).h) j(h)`` plus centrality/invertibility flags."""
    alg, act, comp = ctx.algebra, ctx.action.act, ctx.action.compose
    j, mul = ctx.cocycle.j, ctx.algebra.mul
    residuals = []
    central = invertible = True
    for g, h in pairs:
        lhs = j(comp(g, h))
        rhs = mul(act(j(g), h), j(h))
        residuals.append(alg.distance(lhs, rhs))
        for x in (g, h):
            if alg.is_central is not None and not alg.is_central(j(x)):
                central = False
            if alg.is_invertible is not None and not alg.is_invertible(j(x)):
                invertible = False
    worst = max(residuals, default=0.0)
    return check("cocycle law", "j(gh) = (j(g).h) j(h)", worst, tol, backend="exact" if alg.exact else "numeric",
                 central=central, invertible=invertible, pass_all=bool(worst <= tol and central and invertible))


def induced_automorphism(ctx: CrossedContext, sample_pairs=None, tol: float = 0.0) -> Automorphism:
    """sigma induced by the cocycle; refuses if the cocycle law fails on samples."""
    if sample_pairs is not None:
        rep = cocycle_check(ctx, sample_pairs, tol)
        if not rep.details["pass_all"]:
            raise NotACocycle(f"cocycle residual {rep.residual:.3e}, central={rep.details['central']}")
    return ctx.automorphism()


def derivation_compatibility(ctx: CrossedContext, samples: Iterable[tuple]) -> float:
    """max distance between ``delta(a.g)`` and ``(delta(a).g) j(g)``."""
    act, d, j, mul = ctx.action.act, ctx.delta, ctx.cocycle.j, ctx.algebra.mul
    return max((ctx.algebra.distance(d(act(a, g)), mul(act(d(a), g), j(g))) for a, g in samples), default=0.0)


def twisted_derivation_s(ctx: CrossedContext, s=1, samples=None, tol: float = 0.0) -> Callable[[CrossedElement], CrossedElement]:
    """``delta'_s`` as a callable; checks compatibility of ``delta`` with ``j`` on samples."""
    if samples is not None:
        r = derivation_compatibility(ctx, samples)
        if r > tol:
            raise IncompatibleDerivation(f"compatibility residual {r:.3e} > {tol:.1e}")
    probe = [ctx.action.identity] + [g for _, g in (samples or [])]
    if ctx.action.random is not None:
        rng = np.random.default_rng(0)
        probe += [ctx.action.random(rng) for _ in range(8)]
    try:
        for g in probe:
            ctx._power(g, s)
            ctx._power(g, -s)
    except ValueError as exc:
        raise IncompatibleDerivation(f"(j g)^s not formable for s={s}: {exc}") from exc
    return lambda x: ctx.delta_s(x, s)


def change_of_variable_residual(ctx: CrossedContext, samples: Iterable[tuple]) -> float:
    act, j, tau, mul = ctx.action.act, ctx.cocycle.j, ctx.tau, ctx.algebra.mul
    return max((abs(complex(tau(mul(act(a, g), j(g)))) - complex(tau(a))) for a, g in samples), default=0.0)


def lifted_trace(ctx: CrossedContext, samples=None, tol: float = 0.0) -> Callable[[CrossedElement], Any]:
    """``tau'`` as a callable; checks the change-of-variable property on samples."""
    if samples is not None:
        r = change_of_variable_residual(ctx, samples)
        if r > tol:
            raise ChangeOfVariableFails(f"change-of-variable residual {r:.3e} > {tol:.1e}")
    return ctx.tau_prime


def _scalar_distance(x, y) -> float:
    if isinstance(x, GaussQ) or isinstance(y, GaussQ):
        d = GaussQ.coerce(x) - GaussQ.coerce(y)
        return 0.0 if not d else abs(complex(d))
    return abs(complex(x) - complex(y))


def twisted_derivation_suite(ctx: CrossedContext, rng, n_pairs: int = 100, s=1, tol: float = 0.0, terms: int = 2):
    """Every clause of the crossed-product twist construction, as check records."""
    act, comp = ctx.action, ctx.action.compose
    exact = ctx.algebra.exact
    backend = "exact" if exact else "numeric"
    recs = []
    gpairs = [(act.random(rng), act.random(rng)) for _ in range(n_pairs)]
    recs.append(cocycle_check(ctx, gpairs, tol))
    # action associativity (a.g).h = a.(gh)
    res = 0.0
    for g, h in gpairs[: max(10, n_pairs // 5)]:
        a = ctx.algebra.random(rng)
        res = max(res, ctx.algebra.distance(act.act(act.act(a, g), h), act.act(a, comp(g, h))))
    recs.append(check("action associativity", "(a.g).h = a.(gh)", res, tol, backend))
    samples = [(ctx.algebra.random(rng), act.random(rng)) for _ in range(max(10, n_pairs // 5))]
    recs.append(check("derivation compatibility", "delta(a.g) = (delta(a).g) j(g)", derivation_compatibility(ctx, samples), tol, backend))
    recs.append(check("change of variable", "tau((a.g) j(g)) = tau(a)", change_of_variable_residual(ctx, samples), tol, backend))
    sig = ctx.automorphism()
    d = twisted_derivation_s(ctx, s)
    tp = ctx.tau_prime
    mult = inv = leib = tr = tdel = comm = 0.0
    delta_kills_j = True
    for g in {g for pr in gpairs[:10] for g in pr}:
        if not ctx.algebra.is_zero(ctx.delta(ctx.cocycle.j(g))):
            delta_kills_j = False
    for _ in range(n_pairs):
        x = ctx.random_element(rng, terms)
        y = ctx.random_element(rng, terms)
        xy = x * y
        mult = max(mult, ctx.distance(sig(xy), sig(x) * sig(y)))
        inv = max(inv, ctx.distance(sig.inverse(sig(x)), x))
        leib = max(leib, ctx.distance(d(xy), d(x) * y + sig(x) * d(y)))
        tr = max(tr, _scalar_distance(tp(xy), tp(sig(y) * x)))
        tdel = max(tdel, _scalar_distance(tp(d(x)), 0))
        if delta_kills_j:
            comm = max(comm, ctx.distance(d(sig(x)), sig(d(x))))
    recs.append(check("sigma multiplicative", "sigma(xy) = sigma(x) sigma(y)", mult, tol, backend))
    recs.append(check("sigma invertible", "sigma^-1(sigma(x)) = x", inv, tol, backend))
    recs.append(check("twisted Leibniz", "delta'(xy) = delta'(x) y + sigma(x) delta'(y)", leib, tol, backend, s=str(s)))
    recs.append(check("sigma-trace", "tau'(xy) = tau'(sigma(y) x)", tr, tol, backend))
    recs.append(check("tau' kills delta'", "tau'(delta'(x)) = 0", tdel, tol, backend))
    if delta_kills_j:
        recs.append(check("delta' commutes with sigma", "delta' sigma = sigma delta' when delta(j) = 0", comm, tol, backend))
    return recs


# ---------------------------------------------------------------- q-Laurent scenario


def _gauss_random(rng, bound: int = 5) -> GaussQ:
    num = rng.integers(-bound, bound + 1, size=2)
    den = rng.integers(1, bound + 1, size=2)
    return GaussQ(Q(Fraction(int(num[0]), int(den[0]))), Q(Fraction(int(num[1]), int(den[1]))))


def random_laurent(rng, max_terms: int = 3, deg: int = 2) -> LaurentPoly:
    k = int(rng.integers(1, max_terms + 1))
    exps = rng.integers(-deg, deg + 1, size=k)
    return LaurentPoly({int(e): _gauss_random(rng) for e in exps})


def q_laurent_context(q=Fraction(3, 2), group_range: int = 2, max_terms: int = 2, deg: int = 2) -> CrossedContext:
    """Laurent polynomials over Gaussian rationals, ``Z`` acting by ``t -> q^n t``.

    ``j(n) = q^n``, ``delta = d/dt`` and ``tau`` = coefficient of ``t^-1``.
    Then ``sigma(a (x) n) = q^-n a (x) n`` and ``delta'_s(a (x) n) = q^-n a' (x) n``.
    """
    q = Q(Fraction(q))
    if q <= 0:
        raise ValueError("q must be positive")
    qpows: dict = {}

    def qp(n):
        v = qpows.get(n)
        if v is None:
            v = qpows[n] = qpow(q, n)
        return v

    def act(a: LaurentPoly, n: int) -> LaurentPoly:
        if n == 0:
            return a
        return LaurentPoly._raw({k: v * qp(n * k) for k, v in a.terms.items()})

    def power(n, s):
        sn = Fraction(s) * n
        if sn.denominator != 1:
            raise ValueError(f"q^({sn}) is not rational; only integer s*n is exact")
        return LaurentPoly.const(GaussQ(qp(int(sn))))

    def is_central_scalar_free(a):
        return True  # commutative algebra

    def is_invertible(a):
        return len(a.terms) == 1  # units of a Laurent ring are monomials

    algebra = CoefficientAlgebra(
        label="Laurent[t, 1/t] over Q(i)",
        one=LaurentPoly.const(1),
        zero=LaurentPoly(),
        exact=True,
        is_zero=lambda a: not a.terms,
        distance=lambda a, b: 0.0 if a == b else float(max(abs(complex(v)) for v in (a - b).terms.values())),
        star=lambda a: a.conj(),
        is_central=is_central_scalar_free,
        is_invertible=is_invertible,
        random=lambda rng: random_laurent(rng, max_terms, deg),
    )
    action = GroupAction(
        label="Z by t -> q t",
        identity=0,
        compose=lambda m, n: m + n,
        inverse=lambda n: -n,
        act=act,
        random=lambda rng: int(rng.integers(-group_range, group_range + 1)),
    )
    cocycle = OneCocycle(j=lambda n: LaurentPoly.const(GaussQ(qp(n))), power=power, label="q^n")
    ctx = CrossedContext(algebra, action, cocycle, delta=lambda a: a.derivative(), tau=lambda a: a.coeff(-1), label=f"q-Laurent q={q}")
    ctx.q = q
    return ctx
