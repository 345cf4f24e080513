"""Local index machinery: CM coefficients, iterated nabla, residues and the twisted JLO bracket.

The bracket

    <X_0, .., X_q>_D = int_{Delta_q} Trace(gamma X_0 e^{-s_0 c_0 D^2} X_1 e^{-s_1 c_1 D^2} .. X_q e^{-s_q c_q D^2}) ds
    c_j = mu(U_0 .. U_j)^2

is evaluated either exactly in the eigenbasis of ``D`` (all heat factors are
functions of the same ``D``, so the simplex integral of each matrix element
is a divided difference of ``exp``) or with Grundmann-Moller cubature.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_jacobi

from .characters import zeta_residue_at_zero
from .errors import DegenerateFit, NonConvergentResidue, QuadratureNotConverged, RuleMissing
from .homology import Cochain, coboundary_cochain, connes_B
from .operators import abs_power, eig_hermitian
from .triples import TwistedTriple


# ---------------------------------------------------------------- coefficients and nabla


@dataclass(frozen=True)
class MultiIndex:
    k: tuple

    def __post_init__(self):
        if any(int(x) != x or x < 0 for x in self.k):
            raise ValueError("multi-index entries must be nonnegative integers")

    @property
    def total(self) -> int:
        return int(sum(self.k))


def multi_indices(n: int, total: int):
    """All ``k`` in ``N^n`` with ``|k| = total``."""
    for c in itertools.combinations(range(total + n - 1), n - 1):
        parts, prev = [], -1
        for x in c + (total + n - 1,):
            parts.append(x - prev - 1)
            prev = x
        yield MultiIndex(tuple(parts))


def cm_coefficient(n: int, k) -> complex:
    """``(-1)^|k| sqrt(2i) (k_1!..k_n!)^-1 ((k_1+1)(k_1+k_2+2)..(k_1+..+k_n+n))^-1 Gamma(|k| + n/2)``."""
    if n < 1 or n % 2 == 0:
        raise ValueError("n must be odd and >= 1")
    k = tuple(k.k if isinstance(k, MultiIndex) else k)
    if len(k) != n:
        raise ValueError(f"multi-index of length {len(k)} for n = {n}")
    fact = math.prod(math.factorial(x) for x in k)
    partial = 1
    run = 0
    for i, x in enumerate(k, start=1):
        run += x
        partial *= run + i
    tot = sum(k)
    return (-1) ** tot * np.sqrt(2j) * math.gamma(tot + n / 2) / (fact * partial)


def nabla_iter(D, T, k: int):
    """``nabla^k(T)`` with ``nabla(T) = D^2 T - T D^2``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    D2 = D @ D
    for _ in range(k):
        T = D2 @ T - T @ D2
    return T


# ---------------------------------------------------------------- residues


def residue_integral(P, D, margin: int = 16) -> complex:
    """``Res_{z=0} Trace(P |D|^-z)`` (the Wodzicki-type residue with the ``|D|^-z`` convention)."""
    return zeta_residue_at_zero(P, D, margin=margin)[0]


def local_cocycle_untwisted(t: TwistedTriple, n: int, a: Sequence, residue: Callable = residue_integral,
                            tol: float = 1e-6, max_total: int = 8) -> complex:
    """``sum_k c_{n,k} Res a_0 [D,a_1]^(k_1) .. [D,a_n]^(k_n) |D|^(-n-2|k|)``.

    The ``|k|`` sum stops once three consecutive levels contribute below ``tol``
    (relative); the residue fit resolves trace-class levels to about 1e-7.
    """
    if len(a) != n + 1:
        raise ValueError("tuple length must be n + 1")
    D = t.D
    ops = [t.rep(x) for x in a]
    comm = [D @ x - x @ D for x in ops[1:]]
    total = 0j
    quiet = 0
    for tot in range(max_total + 1):
        level = 0j
        for k in multi_indices(n, tot):
            X = ops[0]
            for c, ki in zip(comm, k.k):
                X = X @ nabla_iter(D, c, ki)
            X = X @ abs_power(D, n + 2 * tot, "drop_modes")
            level += cm_coefficient(n, k) * residue(X, D)
        total += level
        quiet = quiet + 1 if abs(level) <= tol * max(1.0, abs(total)) else 0
        if quiet >= 3:
            return total
    raise NonConvergentResidue(f"k-sum did not settle by |k| = {max_total}")


def ansatz_twisted_cocycle(t: TwistedTriple, n: int, a: Sequence, rule: Callable | None = None,
                           residue: Callable = residue_integral, max_total: int = 0) -> dict:
    """EXPERIMENTAL twisted analogue with iterated twisted commutators from ``rule``.

    ``rule(D, a, k)`` must return ``[D, a]_sigma^(k)``; it is only needed for
    ``|k| >= 1``. The residue uses the ``|D|^-z`` convention; for the
    ``|D|^-2z`` convention divide by 2.
    """
    if max_total > 0 and rule is None:
        raise RuleMissing("iterated twisted commutators need a rule for |k| >= 1")
    D = t.D
    total = 0j
    for tot in range(max_total + 1):
        for k in multi_indices(n, tot):
            X = t.rep(a[0])
            for i, (x, ki) in enumerate(zip(a[1:], k.k), start=1):
                xs = x
                for _ in range(2 * ki + 1):
                    xs = t.sigma.inverse(xs)
                if ki == 0:
                    c = D @ t.rep(xs) - t.rep(t.sigma(xs)) @ D
                else:
                    c = rule(D, xs, ki)
                X = X @ c
            X = X @ abs_power(D, n + 2 * tot, "drop_modes")
            total += cm_coefficient(n, k) * residue(X, D)
    return {"value": total, "status": "EXPERIMENTAL", "max_total": max_total}


def selberg_invariance_residual(P, sigma_P, D, residue: Callable = residue_integral) -> float:
    """``|Res P - Res sigma(P)|`` relative."""
    a, b = residue(P, D), residue(sigma_P, D)
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


# ---------------------------------------------------------------- simplex rules


@dataclass(frozen=True)
class SimplexRule:
    """``kind``: 'exact' (eigenbasis divided differences), 'conical' (Gauss-Jacobi
    conical product, ``s`` points per axis) or 'gm' (Grundmann-Moller, degree ``2s+1``)."""

    kind: str = "exact"
    s: int = 4

    def __post_init__(self):
        if self.kind not in ("exact", "conical", "gm"):
            raise ValueError(f"unknown simplex rule {self.kind!r}")


@lru_cache(maxsize=64)
def grundmann_moller(q: int, s: int):
    """Nodes (barycentric, shape ``(m, q+1)``) and weights summing to ``1/q!``."""
    nodes, weights = [], []
    d = 2 * s + 1
    for i in range(s + 1):
        w = (-1) ** i * 2.0 ** (-2 * s) * (d + q - 2 * i) ** d / (math.factorial(i) * math.factorial(d + q - i))
        denom = d + q - 2 * i
        for beta in _compositions(s - i, q + 1):
            nodes.append([(2 * b + 1) / denom for b in beta])
            weights.append(w)
    return np.asarray(nodes), np.asarray(weights)


@lru_cache(maxsize=64)
def conical_rule(q: int, m: int):
    """Collapsed-coordinate product rule on ``Delta_q``: ``s_0 = u_1``, ``s_i = u_{i+1} prod_{l<=i}(1-u_l)``."""
    if q == 0:
        return np.ones((1, 1)), np.ones(1)
    axes = []
    for i in range(q):
        a = q - 1 - i
        xg, wg = roots_jacobi(m, a, 0)
        axes.append(((xg + 1) / 2, wg / 2 ** (a + 1)))
    grids = np.meshgrid(*[ax[0] for ax in axes], indexing="ij")
    wgrid = np.meshgrid(*[ax[1] for ax in axes], indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=1)
    w = np.prod(np.stack([g.ravel() for g in wgrid], axis=1), axis=1)
    nodes = np.empty((len(w), q + 1))
    rem = np.ones(len(w))
    for i in range(q):
        nodes[:, i] = rem * u[:, i]
        rem = rem * (1 - u[:, i])
    nodes[:, q] = rem
    return nodes, w


def _compositions(total: int, parts: int):
    for c in itertools.combinations(range(total + parts - 1), parts - 1):
        out, prev = [], -1
        for x in c + (total + parts - 1,):
            out.append(x - prev - 1)
            prev = x
        yield out


def _dd_taylor(y: np.ndarray, c: np.ndarray, terms: int = 40) -> np.ndarray:
    """``f[y_0..y_L]`` for ``f(x) = exp(-x)`` by Taylor expansion at ``c``, rows of ``y``.

    ``f[..] = sum_{k>=L} f^(k)(c)/k! h_{k-L}(y - c)`` with ``h`` the complete
    homogeneous symmetric polynomials; meant for clusters of small spread.
    """
    m, L1 = y.shape
    L = L1 - 1
    z = y - c[:, None]
    # h[p][r] = h_r(z_0..z_p), built column by column
    h = np.zeros((terms + 1, m))
    h[0] = 1.0
    for r in range(1, terms + 1):
        h[r] = z[:, 0] ** r
    for p in range(1, L1):
        for r in range(1, terms + 1):
            h[r] = h[r] + z[:, p] * h[r - 1]
    out = np.zeros(m)
    fact = math.factorial(L)
    for k in range(L, L + terms + 1):
        if k - L > terms:
            break
        out += (-1) ** k / fact * h[k - L]
        fact *= k + 1
    return np.exp(-c) * out


def exp_divided_differences(x: np.ndarray, cluster: float = 1.0) -> np.ndarray:
    """``int_{Delta_q} exp(-sum_j s_j x_j) ds`` for each row of ``x`` (shape ``(m, q+1)``).

    This is the divided difference of ``exp(-x)`` (up to the sign ``(-1)^q``).
    Points are sorted; spans wider than ``cluster`` use the recurrence, narrower
    ones the Taylor form, so coincident points need no special casing.
    """
    x = np.sort(np.asarray(x, dtype=float), axis=1)
    m, q1 = x.shape
    if q1 == 1:
        return np.exp(-x[:, 0])
    T = {(i, i): np.exp(-x[:, i]) for i in range(q1)}
    for L in range(1, q1):
        for i in range(q1 - L):
            j = i + L
            span = x[:, j] - x[:, i]
            wide = span >= cluster
            v = np.empty(m)
            if np.any(wide):
                v[wide] = -(T[(i + 1, j)][wide] - T[(i, j - 1)][wide]) / span[wide]
            if np.any(~wide):
                seg = x[~wide, i:j + 1]
                v[~wide] = (-1) ** L * _dd_taylor(seg, 0.5 * (seg[:, 0] + seg[:, -1]))
            T[(i, j)] = v
    return T[(0, q1 - 1)]


# ---------------------------------------------------------------- bracket


def _cum_weights(mus, q: int) -> np.ndarray:
    if mus is None:
        return np.ones(q + 1)
    mus = np.asarray(mus, dtype=float)
    if len(mus) != q + 1:
        raise ValueError("one mu per entry")
    return np.cumprod(mus) ** 2


def twisted_jlo(t: TwistedTriple, entries: Sequence, mus=None, rule: SimplexRule = SimplexRule(), D=None) -> complex:
    """``<X_0, .., X_q>_D`` for operators ``X_j = a_j U_j*`` and scaling factors ``mu(U_j)``."""
    D = t.D if D is None else D
    q = len(entries) - 1
    c = _cum_weights(mus, q)
    X = [np.asarray(e.toarray() if hasattr(e, "toarray") else e, dtype=complex) for e in entries]
    if t.grading is not None:
        X[0] = np.asarray(t.grading) @ X[0]
    spec = eig_hermitian(np.asarray(D.toarray() if hasattr(D, "toarray") else D))
    V = spec.eigenvectors
    lam = spec.eigenvalues**2
    Xe = [V.conj().T @ x @ V for x in X]
    if rule.kind == "exact":
        return _bracket_exact(Xe, lam, c)
    nodes, weights = grundmann_moller(q, rule.s) if rule.kind == "gm" else conical_rule(q, rule.s)
    return _bracket_rule(Xe, lam, c, nodes, weights)


def _bracket_exact(Xe, lam, c) -> complex:
    q = len(Xe) - 1
    dim = len(lam)
    if q == 0:
        return complex(np.sum(np.diag(Xe[0]) * np.exp(-c[0] * lam)))
    # sum over (k_0..k_q): X_0[k_q, k_0] X_1[k_0, k_1] .. X_q[k_{q-1}, k_q] * dd(c_j lam_{k_j})
    grids = np.indices((dim,) * (q + 1)).reshape(q + 1, -1).T
    x = c[None, :] * lam[grids]
    dd = exp_divided_differences(x)
    amp = Xe[0][grids[:, q], grids[:, 0]]
    for j in range(1, q + 1):
        amp = amp * Xe[j][grids[:, j - 1], grids[:, j]]
    return complex(np.sum(amp * dd))


def _bracket_rule(Xe, lam, c, nodes, weights, chunk: int = 4096) -> complex:
    total = 0j
    for s0 in range(0, len(weights), chunk):
        nd, wt = nodes[s0:s0 + chunk], weights[s0:s0 + chunk]
        P = None
        for j, x in enumerate(Xe):
            f = x[None, :, :] * np.exp(-nd[:, j, None] * c[j] * lam[None, :])[:, None, :]
            P = f if P is None else P @ f
        total += complex(np.sum(wt * np.trace(P, axis1=1, axis2=2)))
    return total


def twisted_jlo_adaptive(t: TwistedTriple, entries, mus=None, tol: float = 1e-10, m0: int = 6, m_max: int = 48, kind: str = "conical"):
    """Quadrature with refinement doubling until successive values agree; returns ``(value, change)``."""
    m = m0
    prev = twisted_jlo(t, entries, mus, SimplexRule(kind, m))
    while m < m_max:
        m = min(2 * m, m_max)
        cur = twisted_jlo(t, entries, mus, SimplexRule(kind, m))
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur, abs(cur - prev)
        prev = cur
    raise QuadratureNotConverged(f"{kind} rule did not settle by {m_max} points per axis")


def _jlo_entries(t: TwistedTriple, a: Sequence):
    D = t.D
    ent = [t.rep(a[0])]
    for i, x in enumerate(a[1:], start=1):
        xs = x
        for _ in range(i):
            xs = t.sigma.inverse(xs)
        ent.append(D @ t.rep(xs) - t.rep(t.sigma(xs)) @ D)
    return ent


def jlo_bracket_eps(t: TwistedTriple, q: int, a: Sequence, eps: float, mus=None, rule: SimplexRule = SimplexRule()) -> complex:
    """``<A_0, [D, s^-1(A_1)]_s, .., [D, s^-q(A_q)]_s>_{eps^{1/2} D}`` (no ``eps^{q/2}`` prefactor)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if len(a) != q + 1:
        raise ValueError("tuple length must be q + 1")
    return twisted_jlo(t, _jlo_entries(t, a), mus, rule, D=np.sqrt(eps) * t.D)


def jlo_cochain_eps(t: TwistedTriple, q: int, a: Sequence, eps: float, mus=None, rule: SimplexRule = SimplexRule()) -> complex:
    """``J^q(eps^{1/2} D)(A) = eps^{q/2} <A_0, [D, s^-1(A_1)]_s, .., [D, s^-q(A_q)]_s>_{eps^{1/2} D}``."""
    return eps ** (q / 2) * jlo_bracket_eps(t, q, a, eps, mus, rule)


def jlo_family(t: TwistedTriple, rule: SimplexRule = SimplexRule(), eps: float = 1.0) -> Callable[[int], Cochain]:
    def make(q: int) -> Cochain:
        return Cochain(q, lambda *a: jlo_cochain_eps(t, q, a, eps, rule=rule), f"JLO_{q}")

    return make


def bB_residual(family: Callable[[int], Cochain], q: int, samples, one) -> float:
    """``max |b phi_{q-1} + B phi_{q+1}|`` over sample tuples of length ``q + 1``."""
    b_lo = coboundary_cochain(family(q - 1))
    B_hi = connes_B(family(q + 1), one)
    return max(abs(complex(b_lo(*a) + B_hi(*a))) for a in samples)


# ---------------------------------------------------------------- constant term


@dataclass
class AsymptoticFit:
    exponents: tuple
    coefficients: tuple
    log_coefficients: tuple
    constant: complex
    fit_residual: float
    reliable: bool
    notes: list = field(default_factory=list)


DEFAULT_EPS = tuple(np.geomspace(1e-2, 1e-6, 10))


def constant_term(values, eps_schedule=DEFAULT_EPS, exponents=(1, 2, 3, 4, 5), log_exponents=(), cluster_tol: float = 1e-3) -> AsymptoticFit:
    """Fit ``sum_j c_j eps^{e_j} + sum_l c'_l eps^{e_l} log eps + C`` and return ``C``.

    ``values`` is either a callable ``eps -> value`` or a sequence aligned
    with ``eps_schedule``. Exponents are supplied (nonzero); exponents closer
    than ``cluster_tol`` make the constant unreliable.
    """
    eps = np.asarray(eps_schedule, dtype=float)
    if len(eps) < 6:
        raise DegenerateFit("eps schedule needs at least 6 points")
    r = eps[1:] / eps[:-1]
    if not np.allclose(r, r[0], rtol=1e-9):
        raise DegenerateFit("eps schedule must be geometric")
    y = np.asarray([values(e) for e in eps] if callable(values) else values, dtype=complex)
    ex = tuple(float(e) for e in exponents)
    lx = tuple(float(e) for e in log_exponents)
    if any(e == 0 for e in ex):
        raise DegenerateFit("exponent 0 collides with the constant")
    cols = [np.ones_like(eps)] + [eps**e for e in ex] + [eps**e * np.log(eps) for e in lx]
    A = np.column_stack(cols)
    if A.shape[1] > len(eps):
        raise DegenerateFit(f"{A.shape[1]} unknowns but {len(eps)} samples")
    colscale = np.max(np.abs(A), axis=0)
    As = A / colscale
    if np.linalg.matrix_rank(As) < A.shape[1]:
        raise DegenerateFit("design matrix is rank deficient")
    coef, *_ = np.linalg.lstsq(As.astype(complex), y, rcond=None)
    coef = coef / colscale
    resid = y - A @ coef
    notes = []
    allx = sorted(ex + lx)
    clustered = any(abs(a - b) < cluster_tol for a, b in zip(allx, allx[1:])) and len(set(ex)) == len(ex)
    if clustered:
        notes.append("exponent clustering")
    cond = np.linalg.cond(As)
    if cond > 1e12:
        notes.append(f"ill-conditioned fit (cond {cond:.1e})")
    nx = len(ex)
    return AsymptoticFit(exponents=ex + lx, coefficients=tuple(coef[1:1 + nx]), log_coefficients=tuple(coef[1 + nx:]),
                         constant=complex(coef[0]), fit_residual=float(np.max(np.abs(resid))),
                         reliable=not notes, notes=notes)


def eps_zero_limit(t: TwistedTriple, q: int, a: Sequence) -> complex:
    """Analytic ``eps -> 0`` value of the bracket, ``Trace(gamma A_0 prod [D, s^-i A_i]_s) / q!``, in finite dimensions.

    The heat factors tend to the identity and ``vol(Delta_q) = 1/q!``.
    """
    X = None
    for x in _jlo_entries(t, a):
        X = x if X is None else X @ x
    if t.grading is not None:
        X = t.grading @ X
    return complex(np.trace(X)) / math.factorial(q)
