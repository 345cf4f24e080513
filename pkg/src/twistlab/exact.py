"""Exact scalars and Laurent polynomials.

``GaussQ`` is a complex number with rational real and imaginary parts
(gmpy2 ``mpq`` when available, ``fractions.Fraction`` otherwise).
``LaurentPoly`` is a finitely supported map exponent -> ``GaussQ``.
"""

from __future__ import annotations

from fractions import Fraction

try:
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction


def Q(x) -> "_Q":
    if isinstance(x, Fraction):
        return _Q(x.numerator, x.denominator)
    if isinstance(x, str):
        return _Q(Fraction(x).numerator, Fraction(x).denominator)
    return _Q(x)


_ZERO = Q(0)
_ONE = Q(1)


class GaussQ:
    """Gaussian rational ``re + i im``."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is type(_ZERO) else Q(re)
        self.im = im if type(im) is type(_ZERO) else Q(im)

    @classmethod
    def coerce(cls, x) -> "GaussQ":
        if isinstance(x, GaussQ):
            return x
        if isinstance(x, complex):
            return cls(Fraction(x.real).limit_denominator(10**12), Fraction(x.imag).limit_denominator(10**12))
        return cls(x, 0)

    def __add__(self, o):
        o = GaussQ.coerce(o)
        return GaussQ(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        o = GaussQ.coerce(o)
        return GaussQ(self.re - o.re, self.im - o.im)

    def __rsub__(self, o):
        return GaussQ.coerce(o) - self

    def __neg__(self):
        return GaussQ(-self.re, -self.im)

    def __mul__(self, o):
        if not isinstance(o, GaussQ):
            if isinstance(o, (int, Fraction)) or type(o) is type(_ZERO):
                o = Q(o)
                return GaussQ(self.re * o, self.im * o)
            o = GaussQ.coerce(o)
        return GaussQ(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def inverse(self) -> "GaussQ":
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        return GaussQ(self.re / n, -self.im / n)

    def __truediv__(self, o):
        return self * GaussQ.coerce(o).inverse()

    def __rtruediv__(self, o):
        return GaussQ.coerce(o) * self.inverse()

    def conj(self) -> "GaussQ":
        return GaussQ(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, o):
        try:
            o = GaussQ.coerce(o)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussQ({self})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"


GZERO = GaussQ(0)
GONE = GaussQ(1)


def qpow(q, n: int):
    """``q**n`` for a rational ``q`` and integer ``n`` (negative allowed)."""
    return q**n if n >= 0 else _ONE / q ** (-n)


class LaurentPoly:
    """Laurent polynomial in ``t`` with ``GaussQ`` coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = {k: GaussQ.coerce(v) for k, v in (terms or {}).items() if v}

    @classmethod
    def _raw(cls, terms: dict) -> "LaurentPoly":
        p = cls.__new__(cls)
        p.terms = terms
        return p

    @classmethod
    def const(cls, c) -> "LaurentPoly":
        return cls({0: c})

    @classmethod
    def monomial(cls, k: int, c=1) -> "LaurentPoly":
        return cls({k: c})

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def coeff(self, k: int) -> GaussQ:
        return self.terms.get(k, GZERO)

    def __add__(self, o):
        if not isinstance(o, LaurentPoly):
            o = LaurentPoly.const(o)
        out = dict(self.terms)
        for k, v in o.terms.items():
            s = out.get(k)
            s = v if s is None else s + v
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return LaurentPoly._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly._raw({k: -v for k, v in self.terms.items()})

    def __sub__(self, o):
        if not isinstance(o, LaurentPoly):
            o = LaurentPoly.const(o)
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if not isinstance(o, LaurentPoly):
            c = GaussQ.coerce(o)
            if not c:
                return LaurentPoly._raw({})
            return LaurentPoly._raw({k: v * c for k, v in self.terms.items()})
        out: dict = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in o.terms.items():
                k = k1 + k2
                p = v1 * v2
                s = out.get(k)
                out[k] = p if s is None else s + p
        return LaurentPoly._raw({k: v for k, v in out.items() if v})

    __rmul__ = __mul__

    def derivative(self) -> "LaurentPoly":
        return LaurentPoly._raw({k - 1: v * k for k, v in self.terms.items() if k != 0})

    def scale_variable(self, c) -> "LaurentPoly":
        """``t -> c t``: coefficient of ``t^k`` multiplied by ``c^k`` (``c`` rational)."""
        return LaurentPoly._raw({k: v * qpow(c, k) for k, v in self.terms.items()})

    def conj(self) -> "LaurentPoly":
        return LaurentPoly._raw({k: v.conj() for k, v in self.terms.items()})

    def __eq__(self, o):
        if not isinstance(o, LaurentPoly):
            o = LaurentPoly.const(o)
        return self.terms == o.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({v})t^{k}" for k, v in sorted(self.terms.items()))

    def evaluate(self, t: complex) -> complex:
        return sum(complex(v) * t**k for k, v in self.terms.items())
