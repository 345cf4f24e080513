"""Hochschild chains and cochains, the boundary b and Connes' operator B.

Algebra elements are matrices (multiplied with ``@``) or any objects with
``*``. Cochains are closures and are only ever compared by evaluation.

Conventions (n = degree of the input):

    b(a0 x .. x an) = sum_{i<n} (-1)^i .. a_i a_{i+1} .. + (-1)^n a_n a_0 x a_1 .. a_{n-1}
    (B0 phi)(a0..a_{n-1}) = phi(1, a0, .., a_{n-1}) - (-1)^n phi(a0, .., a_{n-1}, 1)
    (A psi)(a0..am)       = sum_i (-1)^{m i} psi(a_i, .., a_m, a_0, .., a_{i-1})
    B = A B0

With this normalization B^2 = 0 and bB + Bb = 0 hold on all cochains, not only
on normalized ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
import scipy.sparse as sp

from .errors import DegreeMismatch, DegreeZero

B_CONVENTION = "B = A o B0, B0 phi = phi(1,..) - (-1)^n phi(..,1), A = sum_i (-1)^(n i) rotation^i"


def mul(a, b):
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray) or sp.issparse(a) or sp.issparse(b):
        return a @ b
    return a * b


@dataclass
class Chain:
    """Finite sum of weighted elementary tensors ``w a0 x .. x an``."""

    degree: int
    terms: list = field(default_factory=list)

    def __post_init__(self):
        for w, fac in self.terms:
            if len(fac) != self.degree + 1:
                raise DegreeMismatch(f"term of arity {len(fac)} in a degree {self.degree} chain")

    @classmethod
    def single(cls, *factors, weight=1.0):
        return cls(len(factors) - 1, [(weight, tuple(factors))])

    def __add__(self, o: "Chain") -> "Chain":
        if o.degree != self.degree:
            raise DegreeMismatch(f"{self.degree} vs {o.degree}")
        return Chain(self.degree, self.terms + o.terms)

    def __rmul__(self, c) -> "Chain":
        return Chain(self.degree, [(c * w, f) for w, f in self.terms])

    def __neg__(self):
        return (-1) * self

    def __sub__(self, o):
        return self + (-o)


@dataclass
class Cochain:
    """(n+1)-linear functional given by ``evaluate``."""

    degree: int
    evaluate: Callable[..., Any]
    label: str = ""

    def __call__(self, *args):
        if len(args) != self.degree + 1:
            raise DegreeMismatch(f"{self.label or 'cochain'} of degree {self.degree} got {len(args)} arguments")
        return self.evaluate(*args)

    def __add__(self, o: "Cochain") -> "Cochain":
        if o.degree != self.degree:
            raise DegreeMismatch(f"{self.degree} vs {o.degree}")
        return Cochain(self.degree, lambda *a: self(*a) + o(*a), f"({self.label} + {o.label})")

    def __rmul__(self, c) -> "Cochain":
        return Cochain(self.degree, lambda *a: c * self(*a), f"{c}*{self.label}")

    def __neg__(self):
        return (-1) * self

    def __sub__(self, o):
        return self + (-o)


def zero_cochain(n: int) -> Cochain:
    return Cochain(n, lambda *a: 0.0, "0")


def boundary_chain(c: Chain) -> Chain:
    n = c.degree
    if n < 1:
        raise DegreeZero("b is not defined on 0-chains")
    out = []
    for w, a in c.terms:
        for i in range(n):
            out.append(((-1) ** i * w, a[:i] + (mul(a[i], a[i + 1]),) + a[i + 2:]))
        out.append(((-1) ** n * w, (mul(a[n], a[0]),) + a[1:n]))
    return Chain(n - 1, out)


def coboundary_cochain(phi: Cochain) -> Cochain:
    n = phi.degree

    def ev(*a):
        s = 0
        for i in range(n + 1):
            s = s + (-1) ** i * phi(*(a[:i] + (mul(a[i], a[i + 1]),) + a[i + 2:]))
        return s + (-1) ** (n + 1) * phi(*((mul(a[n + 1], a[0]),) + a[1:n + 1]))

    return Cochain(n + 1, ev, f"b{phi.label}")


def pairing(phi: Cochain, c: Chain):
    if phi.degree != c.degree:
        raise DegreeMismatch(f"cochain degree {phi.degree} vs chain degree {c.degree}")
    return sum((w * phi(*a) for w, a in c.terms), 0.0)


def cyclicity_residual(phi: Cochain, samples) -> float:
    """max |phi(a_n, a_0, .., a_{n-1}) - (-1)^n phi(a_0, .., a_n)| over sample tuples."""
    n = phi.degree
    worst = 0.0
    for a in samples:
        a = tuple(a)
        r = phi(*((a[n],) + a[:n])) - (-1) ** n * phi(*a)
        worst = max(worst, abs(complex(r)))
    return worst


def multilinearity_residual(phi: Cochain, samples, rng) -> float:
    """Slot-by-slot check of ``phi(.., x + c y, ..) = phi(.., x, ..) + c phi(.., y, ..)``."""
    worst = 0.0
    samples = [tuple(s) for s in samples]
    for k, a in enumerate(samples):
        b = samples[(k + 1) % len(samples)]
        c = complex(rng.normal(), rng.normal())
        for i in range(phi.degree + 1):
            mixed = a[:i] + (a[i] + c * b[i],) + a[i + 1:]
            other = a[:i] + (b[i],) + a[i + 1:]
            r = phi(*mixed) - phi(*a) - c * phi(*other)
            worst = max(worst, abs(complex(r)))
    return worst


def connes_B(phi: Cochain, one) -> Cochain:
    n = phi.degree
    if n < 1:
        raise DegreeZero("B lowers degree; not defined on 0-cochains")
    m = n - 1

    def b0(*a):
        return phi(one, *a) - (-1) ** n * phi(*a, one)

    def ev(*a):
        s = 0
        for i in range(m + 1):
            s = s + (-1) ** (m * i) * b0(*(a[i:] + a[:i]))
        return s

    return Cochain(m, ev, f"B{phi.label}")


def chain_probe_norm(c: Chain, rng=None, probes: int = 4) -> float:
    """Norm proxy for a chain of matrices: max over random product functionals.

    A generic functional ``prod_i Tr(R_i a_i)`` vanishes on a nonzero tensor
    with probability zero, so a few probes detect nonzero chains.
    """
    if not c.terms:
        return 0.0
    rng = np.random.default_rng(0) if rng is None else rng
    shapes = [np.shape(f) for f in c.terms[0][1]]
    scale = max(1.0, max(abs(w) * max(float(np.max(np.abs(f))) for f in a) ** len(a) for w, a in c.terms))
    worst = 0.0
    for _ in range(probes):
        R = [rng.normal(size=s) + 1j * rng.normal(size=s) for s in shapes]
        v = 0
        for w, a in c.terms:
            p = w
            for Ri, ai in zip(R, a):
                p = p * np.sum(Ri * ai)
            v = v + p
        worst = max(worst, abs(v))
    return float(worst / scale)


def is_cycle(c: Chain, tol: float = 1e-9, rng=None) -> bool:
    return chain_probe_norm(boundary_chain(c), rng) <= tol


def trace_cochain(n: int, weight=None) -> Cochain:
    """``Tr(W a0 a1 .. an)``; cyclic only for W = id."""

    def ev(*a):
        p = a[0] if weight is None else weight @ a[0]
        for x in a[1:]:
            p = p @ x
        return np.trace(p)

    return Cochain(n, ev, "Tr")


def random_matrix_cochain(rng, n: int, dim: int) -> Cochain:
    """Generic multilinear functional ``Tr(R0 a0 R1 a1 .. Rn an)``."""
    R = [rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)) for _ in range(n + 1)]

    def ev(*a):
        p = np.eye(dim)
        for Ri, ai in zip(R, a):
            p = p @ Ri @ ai
        return np.trace(p)

    return Cochain(n, ev, "rand")
