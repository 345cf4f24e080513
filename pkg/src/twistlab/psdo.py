"""Formal twisted pseudodifferential symbols ``sum_{n <= N} a_n xi^n``.

Coefficients sit to the left of powers of ``xi`` and are moved past it with

    xi a      = sigma(a) xi + delta(a)
    xi^-1 a   = sum_{k >= 0} (-1)^k sigma^-1((delta sigma^-1)^k a) xi^(-1-k)

The second rule is the unique left-normal inverse of the first and is checked
against it in the tests. Infinite expansions are cut at the context floor;
every symbol carries a validity floor below which its coefficients are not
known (``None`` means the symbol is an exact finite sum).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from .errors import FloorExhausted, IncompatibleDerivation


@dataclass(frozen=True)
class SymbolContext:
    """Coefficient algebra with ``sigma``, a sigma-derivation and a sigma-trace."""

    one: Any
    zero: Any
    sigma: Callable[[Any], Any]
    sigma_inv: Callable[[Any], Any]
    delta: Callable[[Any], Any]
    tau: Callable[[Any], Any]
    floor: int = -12
    is_zero: Callable[[Any], bool] = lambda a: not a
    exact: bool = True
    label: str = ""

    def certify(self, samples, distance, tol: float = 0.0) -> dict:
        """Check sigma-derivation, sigma-trace and ``tau(delta(a)) = 0`` on samples."""
        leib = trace = tdel = 0.0
        for a, b in samples:
            leib = max(leib, distance(self.delta(a * b), self.delta(a) * b + self.sigma(a) * self.delta(b)))
            trace = max(trace, abs(complex(self.tau(a * b)) - complex(self.tau(self.sigma(b) * a))))
            tdel = max(tdel, abs(complex(self.tau(self.delta(a)))))
        res = {"sigma_derivation": leib, "sigma_trace": trace, "tau_delta": tdel}
        if max(res.values()) > tol:
            raise IncompatibleDerivation(f"symbol context fails certification: {res}")
        return res


class FormalTwistedSymbol:
    """Order -> coefficient map with a validity floor."""

    __slots__ = ("ctx", "coeffs", "validity")

    def __init__(self, ctx: SymbolContext, coeffs: dict, validity: int | None = None):
        self.ctx = ctx
        self.validity = validity
        z = ctx.is_zero
        self.coeffs = {
            int(k): v for k, v in coeffs.items() if not z(v) and (validity is None or k >= validity) and k >= ctx.floor
        }

    @property
    def top(self) -> int | None:
        return max(self.coeffs) if self.coeffs else None

    def coeff(self, k: int):
        return self.coeffs.get(k, self.ctx.zero)

    def effective_floor(self) -> int:
        return self.ctx.floor if self.validity is None else max(self.validity, self.ctx.floor)

    def __add__(self, o: "FormalTwistedSymbol") -> "FormalTwistedSymbol":
        out = dict(self.coeffs)
        for k, v in o.coeffs.items():
            out[k] = out[k] + v if k in out else v
        return FormalTwistedSymbol(self.ctx, out, _max_validity(self.validity, o.validity))

    def __neg__(self):
        return FormalTwistedSymbol(self.ctx, {k: -v for k, v in self.coeffs.items()}, self.validity)

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o):
        return symbol_multiply(self, o)

    def to_json(self) -> dict:
        return {
            "validity_floor": self.validity,
            "coeffs": {str(k): repr(v) for k, v in sorted(self.coeffs.items())},
        }

    def __repr__(self):
        return f"Symbol(top={self.top}, validity={self.validity}, {self.to_json()['coeffs']})"


def _max_validity(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


def symbol(ctx: SymbolContext, coeffs: dict, validity: int | None = None) -> FormalTwistedSymbol:
    return FormalTwistedSymbol(ctx, coeffs, validity)


def xi_power(ctx: SymbolContext, n: int) -> FormalTwistedSymbol:
    return FormalTwistedSymbol(ctx, {n: ctx.one})


def xi_times(ctx: SymbolContext, a) -> FormalTwistedSymbol:
    """``xi a = sigma(a) xi + delta(a)``."""
    return FormalTwistedSymbol(ctx, {1: ctx.sigma(a), 0: ctx.delta(a)})


def xi_pow_times(ctx: SymbolContext, m: int, a, lowest: int) -> dict:
    """Left-normal form of ``xi^m a`` keeping orders ``>= lowest``."""
    expansion = {0: a}
    if m >= 0:
        for _ in range(m):
            nxt: dict = {}
            for k, c in expansion.items():
                s, d = ctx.sigma(c), ctx.delta(c)
                if not ctx.is_zero(s):
                    nxt[k + 1] = nxt[k + 1] + s if k + 1 in nxt else s
                if not ctx.is_zero(d):
                    nxt[k] = nxt[k] + d if k in nxt else d
            expansion = nxt
        return {k: v for k, v in expansion.items() if k >= lowest}
    for _ in range(-m):
        nxt = {}
        for k, c in expansion.items():
            # xi^-1 (c xi^k) = sum_j t_j xi^(k-1-j)
            depth = k - 1 - lowest + 1
            if depth <= 0:
                continue
            for j, tj in enumerate(xi_inverse_terms(ctx, c, depth)):
                o = k - 1 - j
                nxt[o] = nxt[o] + tj if o in nxt else tj
        expansion = nxt
    return {k: v for k, v in expansion.items() if k >= lowest and not ctx.is_zero(v)}


def xi_inverse_terms(ctx: SymbolContext, a, depth: int) -> list:
    """Coefficients ``t_k = (-1)^k sigma^-1(c_k)``, ``c_0 = a``, ``c_{k+1} = delta(sigma^-1(c_k))``."""
    out = []
    c = a
    for k in range(depth):
        if ctx.is_zero(c):
            break
        s = ctx.sigma_inv(c)
        out.append(s if k % 2 == 0 else -s)
        c = ctx.delta(s)
    return out


def xi_inverse_times(ctx: SymbolContext, a, lowest: int | None = None) -> FormalTwistedSymbol:
    """``xi^-1 a`` expanded down to the context floor."""
    lowest = ctx.floor if lowest is None else lowest
    coeffs = {-1 - k: t for k, t in enumerate(xi_inverse_terms(ctx, a, -1 - lowest + 1))}
    return FormalTwistedSymbol(ctx, coeffs, validity=lowest)


def symbol_multiply(P: FormalTwistedSymbol, Q: FormalTwistedSymbol) -> FormalTwistedSymbol:
    """Product in left-normal form, exact above the returned validity floor.

    Raises:
        FloorExhausted: the validity floor lies above the top order of the product.
    """
    ctx = P.ctx
    if Q.ctx is not ctx:
        raise ValueError("symbols from different contexts")
    if not P.coeffs or not Q.coeffs:
        return FormalTwistedSymbol(ctx, {}, _max_validity(P.validity, Q.validity))
    tP, tQ = P.top, Q.top
    validity = None
    if P.validity is not None:
        validity = P.validity + tQ
    if Q.validity is not None:
        validity = _max_validity(validity, Q.validity + tP)
    if min(P.coeffs) < 0 or min(P.coeffs) + min(Q.coeffs) < ctx.floor:
        validity = _max_validity(validity, ctx.floor)
    lowest = ctx.floor if validity is None else max(validity, ctx.floor)
    if lowest > tP + tQ:
        raise FloorExhausted(f"validity floor {lowest} above product top order {tP + tQ}")
    out: dict = {}
    for i, p in P.coeffs.items():
        for j, q in Q.coeffs.items():
            if i + j < lowest:
                continue
            for k, e in xi_pow_times(ctx, i, q, lowest - j).items():
                c = p * e
                o = k + j
                out[o] = out[o] + c if o in out else c
    return FormalTwistedSymbol(ctx, out, validity)


def residue(P: FormalTwistedSymbol):
    """``tau`` of the ``xi^-1`` coefficient.

    Raises:
        FloorExhausted: the ``xi^-1`` coefficient lies below the validity floor.
    """
    if P.validity is not None and P.validity > -1:
        raise FloorExhausted(f"xi^-1 coefficient not exact (validity floor {P.validity})")
    if -1 < P.ctx.floor:
        raise FloorExhausted("context floor above -1")
    return P.ctx.tau(P.coeff(-1))


def random_symbol(ctx: SymbolContext, rng, element: Callable, max_order: int = 3, min_order: int = -3, density: float = 0.6):
    """Random finite symbol with orders in ``[min_order, max_order]``; top order always present."""
    coeffs = {max_order: element(rng)}
    for k in range(min_order, max_order):
        if rng.random() < density:
            coeffs[k] = element(rng)
    return FormalTwistedSymbol(ctx, coeffs)


def symbol_context_from_crossed(cctx, s=1, floor: int = -12) -> SymbolContext:
    """Symbol context over a crossed product with ``sigma``, ``delta'_s``, ``tau'``."""
    return SymbolContext(
        one=cctx.one(),
        zero=cctx.zero(),
        sigma=cctx.sigma,
        sigma_inv=cctx.sigma_inv,
        delta=lambda x: cctx.delta_s(x, s),
        tau=cctx.tau_prime,
        floor=floor,
        is_zero=lambda x: x.is_zero(),
        exact=cctx.algebra.exact,
        label=f"Psi({cctx.label}, s={s})",
    )
