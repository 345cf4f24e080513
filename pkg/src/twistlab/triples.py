"""Twisted spectral triples on finite and truncated Hilbert spaces.

A triple holds algebra *elements* (matrices for finite models, crossed-product
elements or sampled functions for scenarios), a ``represent`` map to
operators, the Dirac operator ``D`` and a twist ``sigma`` acting on elements.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Callable

import numpy as np
import scipy.linalg as sla
from scipy import optimize

from .algebra import Automorphism, identity_automorphism
from .errors import (
    DimensionMismatch,
    NonCommutativeAlgebra,
    NonHermitianPerturbation,
    ScalingDefectTooLarge,
    ZeroOperator,
)
from .operators import abs_op, as_operator, hermitian_defect, op_norm
from .report import check

SCALING_TOLERANCE = 1e-8


def _dense(x):
    return x.toarray() if hasattr(x, "toarray") else np.asarray(x)


def _herm_conj(x):
    return x.conj().T


@dataclass(frozen=True)
class TwistedTriple:
    """Generators, Dirac operator, twist and optional grading."""

    generators: dict
    D: Any
    sigma: Automorphism = field(default_factory=identity_automorphism)
    grading: Any = None
    kernel_policy: str = "drop_modes"
    represent: Callable[[Any], Any] = lambda a: a
    star: Callable[[Any], Any] = _herm_conj
    truncation_meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.D.shape[0]

    def rep(self, a):
        return self.represent(a)

    def gamma(self):
        if self.grading is None:
            return np.eye(self.dim)
        return self.grading


def twisted_commutator(D, a, sigma=None):
    """``D a - sigma(a) D``; ``sigma`` may be a callable or an operator already equal to ``sigma(a)``."""
    if sigma is None:
        sa = a
    elif callable(sigma):
        sa = sigma(a)
    else:
        sa = sigma
    if D.shape != a.shape or D.shape != sa.shape:
        raise DimensionMismatch(f"shapes {D.shape}, {a.shape}, {sa.shape}")
    return D @ a - sa @ D


def lipschitz_commutator(D, a, sigma=None, absD=None):
    """``|D| a - sigma(a) |D|``."""
    absD = abs_op(D) if absD is None else absD
    return twisted_commutator(absD, a, sigma)


def _residual(x) -> float:
    x = _dense(x)
    return float(np.max(np.abs(x))) if x.size else 0.0


def validate_triple(t: TwistedTriple, tol: float = 1e-10, rng=None) -> list:
    """Residuals of the structural axioms, one record per invariant."""
    recs = []
    D = t.D
    recs.append(check("D hermitian", "D = D*", hermitian_defect(D), tol))
    gens = list(t.generators.values())
    if t.grading is not None:
        g = t.grading
        recs.append(check("grading hermitian", "gamma = gamma*", hermitian_defect(g), tol))
        recs.append(check("grading involutive", "gamma^2 = 1", _residual(g @ g - np.eye(t.dim)), tol))
        recs.append(check("grading odd D", "gamma D = -D gamma", _residual(g @ D + D @ g), tol))
        even = max((_residual(g @ t.rep(a) - t.rep(a) @ g) for a in gens), default=0.0)
        recs.append(check("grading even algebra", "gamma a = a gamma", even, tol))
    inv = max((_residual(t.rep(t.sigma.inverse(t.sigma(a))) - t.rep(a)) for a in gens), default=0.0)
    recs.append(check("sigma invertible", "sigma^-1 sigma = id", inv, tol))
    mult = 0.0
    for a in gens:
        for b in gens:
            mult = max(mult, _residual(t.rep(t.sigma(a * b if not isinstance(a, np.ndarray) else a @ b))
                                       - t.rep(t.sigma(a)) @ t.rep(t.sigma(b))))
    recs.append(check("sigma multiplicative", "sigma(ab) = sigma(a) sigma(b)", mult, tol))
    compat = max((_residual(t.rep(t.star(t.sigma(a))) - t.rep(t.sigma.inverse(t.star(a)))) for a in gens), default=0.0)
    recs.append(check("involution compatibility", "sigma(a)* = sigma^-1(a*)", compat, tol))
    return recs


def twisted_leibniz_residual(t: TwistedTriple, a, b) -> float:
    """``[D,ab]_s - [D,a]_s b - s(a)[D,b]_s`` for matrix elements."""
    D = t.D
    lhs = twisted_commutator(D, a @ b, t.sigma)
    rhs = twisted_commutator(D, a, t.sigma) @ b + t.sigma(a) @ twisted_commutator(D, b, t.sigma)
    return _residual(lhs - rhs)


def conformal_perturb(t: TwistedTriple, h, tol: float = 1e-9) -> TwistedTriple:
    """``D' = e^h D e^h`` with ``sigma'(a) = e^h sigma(e^h a e^-h) e^-h``.

    Certifies ``[D', a]_{sigma'} = e^h [D, e^h a e^-h]_sigma e^h`` on generators.
    """
    h = as_operator(h)
    if hermitian_defect(h) > 1e-10 * max(1.0, float(np.max(np.abs(h)))):
        raise NonHermitianPerturbation("h must be hermitian")
    E = sla.expm(h)
    Einv = sla.expm(-h)
    sig = t.sigma

    def fwd(a):
        return E @ sig(E @ a @ Einv) @ Einv

    def bwd(a):
        return Einv @ sig.inverse(Einv @ a @ E) @ E

    new_sigma = Automorphism(fwd, bwd, label=f"conformal({sig.label})")
    D2 = E @ _dense(t.D) @ E
    D2 = 0.5 * (D2 + D2.conj().T)
    worst = 0.0
    for a in t.generators.values():
        lhs = twisted_commutator(D2, a, new_sigma)
        rhs = E @ twisted_commutator(_dense(t.D), E @ a @ Einv, sig) @ E
        worst = max(worst, _residual(lhs - rhs) / max(1.0, _residual(rhs)))
    meta = dict(t.truncation_meta)
    meta["conformal_certificate"] = worst
    if worst > tol:
        meta["conformal_certificate_failed"] = True
    return replace(t, D=D2, sigma=new_sigma, truncation_meta=meta)


@dataclass(frozen=True)
class ScalingResult:
    mu: float
    defect: float
    accepted: bool
    window: tuple | None = None


def scaling_check(U, D, tol: float = SCALING_TOLERANCE, window=None) -> ScalingResult:
    """Best ``mu`` with ``U D U* ~ mu D`` (Frobenius projection) and the relative defect.

    ``window`` (index array or slice) restricts both sides to a compression,
    used for truncated models whose defect lives at the boundary.
    """
    U, D = _dense(U), _dense(D)
    C = U @ D @ U.conj().T
    if window is not None:
        idx = np.arange(D.shape[0])[window]
        C, D = C[np.ix_(idx, idx)], D[np.ix_(idx, idx)]
    nD = np.linalg.norm(D)
    if nD == 0:
        raise ZeroOperator("D = 0 leaves mu undetermined")
    mu = float(np.real(np.vdot(D, C)) / nD**2)
    defect = float(np.linalg.norm(C - mu * D) / nD)
    accepted = bool(defect <= tol and mu > 0)
    w = None if window is None else (int(idx[0]), int(idx[-1]) + 1)
    return ScalingResult(mu=mu, defect=defect, accepted=accepted, window=w)


@dataclass(frozen=True)
class ScalingGroup:
    """Finite group of unitaries with their scaling factors and composition table."""

    unitaries: tuple
    mus: tuple
    table: dict
    identity: int
    inverses: tuple

    @property
    def size(self) -> int:
        return len(self.unitaries)

    def unitarity_defect(self) -> float:
        return max(_residual(U @ U.conj().T - np.eye(U.shape[0])) for U in self.unitaries)

    def mu_character_defect(self) -> float:
        return max((abs(self.mus[self.table[i, j]] - self.mus[i] * self.mus[j]) for (i, j) in self.table), default=0.0)


def generate_scaling_group(generators, D, max_size: int = 64, tol: float = 1e-9) -> ScalingGroup:
    """Close a list of unitaries under products and record mu for each element."""
    n = D.shape[0]
    elems = [np.eye(n, dtype=complex)]

    def find(M):
        for k, E in enumerate(elems):
            if np.max(np.abs(E - M)) <= tol:
                return k
        return -1

    frontier = [np.asarray(U, dtype=complex) for U in generators]
    for U in frontier:
        if find(U) < 0:
            elems.append(U)
    changed = True
    while changed:
        changed = False
        for A in list(elems):
            for B in list(elems):
                M = A @ B
                if find(M) < 0:
                    elems.append(M)
                    changed = True
                    if len(elems) > max_size:
                        raise ValueError(f"group exceeds {max_size} elements")
    table = {}
    for i, A in enumerate(elems):
        for j, B in enumerate(elems):
            table[i, j] = find(A @ B)
    inverses = tuple(next(j for j in range(len(elems)) if table[i, j] == 0) for i in range(len(elems)))
    mus = tuple(scaling_check(U, D).mu for U in elems)
    return ScalingGroup(unitaries=tuple(elems), mus=mus, table=table, identity=0, inverses=inverses)


def matrix_algebra(dim: int, rng_scale: float = 1.0):
    """Coefficient algebra of complex ``dim x dim`` matrices (numeric)."""
    from .crossed import CoefficientAlgebra

    def rand(rng):
        return rng_scale * (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))

    return CoefficientAlgebra(
        label=f"M_{dim}(C)",
        one=np.eye(dim, dtype=complex),
        zero=np.zeros((dim, dim), dtype=complex),
        exact=False,
        is_zero=lambda a: not np.any(a),
        distance=lambda a, b: float(np.max(np.abs(a - b))) if np.size(a) else 0.0,
        star=lambda a: a.conj().T,
        random=rand,
        mul=lambda a, b: a @ b,
    )


def scaling_crossed_triple(t: TwistedTriple, G: ScalingGroup, tol: float = SCALING_TOLERANCE, algebra=None):
    """Twisted triple on ``A x| G`` with ``sigma(a U) = mu(U)^-1 a U``.

    Elements are crossed sums ``a (x) U`` (the group acting by ``a.U = U* a U``)
    represented as ``U a``; the product ``aU = (a.U) (x) U``. Returns the triple
    and the crossed context; the identity ``[D, aU]_sigma = [D, a] U`` is
    certified on generator-unitary pairs.
    """
    from .crossed import CrossedContext, GroupAction, OneCocycle

    D = _dense(t.D)
    for k, U in enumerate(G.unitaries):
        res = scaling_check(U, D, tol)
        if not res.accepted:
            raise ScalingDefectTooLarge(f"element {k}: defect {res.defect:.3e} > {tol:.1e}")
    algebra = algebra or matrix_algebra(D.shape[0])
    Us = G.unitaries
    action = GroupAction(
        label="conjugation by scaling unitaries",
        identity=G.identity,
        compose=lambda i, j: G.table[i, j],
        inverse=lambda i: G.inverses[i],
        act=lambda a, i: Us[i].conj().T @ a @ Us[i],
        random=lambda rng: int(rng.integers(0, G.size)),
    )
    cocycle = OneCocycle(j=lambda i: G.mus[i] * algebra.one, power=lambda i, s: G.mus[i] ** s * algebra.one, label="mu")

    ctx = CrossedContext(algebra, action, cocycle, label="A x| G")

    def represent(x):
        out = np.zeros_like(D, dtype=complex)
        for i, a in x.support.items():
            out = out + Us[i] @ a
        return out

    def a_times_U(a, i):
        return ctx.basis(action.act(a, i), i)

    sigma = ctx.automorphism()
    gens = {}
    for name, a in t.generators.items():
        for i in range(G.size):
            gens[f"{name}U{i}"] = a_times_U(t.rep(a), i)
    worst = 0.0
    for name, a in t.generators.items():
        A = t.rep(a)
        for i, U in enumerate(Us):
            x = a_times_U(A, i)
            lhs = D @ represent(x) - represent(sigma(x)) @ D
            rhs = (D @ A - A @ D) @ U
            worst = max(worst, _residual(lhs - rhs))
    meta = dict(t.truncation_meta)
    meta["crossed_commutator_certificate"] = worst
    tri = TwistedTriple(
        generators=gens,
        D=D,
        sigma=sigma,
        grading=t.grading,
        kernel_policy=t.kernel_policy,
        represent=represent,
        star=lambda x: crossed_star(ctx, x),
        truncation_meta=meta,
    )
    return tri, ctx


def crossed_star(ctx, x):
    """Adjoint in the crossed algebra: ``(a (x) U)* = (a*.U^-1) (x) U^-1`` for ``pi'(a (x) U) = U a``."""
    act, inv = ctx.action.act, ctx.action.inverse
    out = {}
    for g, a in x.support.items():
        gi = inv(g)
        b = act(a.conj().T, gi)
        out[gi] = out[gi] + b if gi in out else b
    return ctx.element(out)


# ------------------------------------------------------------ spectral distance


@dataclass(frozen=True)
class DistanceResult:
    distance: float
    f: np.ndarray
    constraint_activity: float
    starts: int
    min_commutator_norm: float


def _diag_operator_check(t: TwistedTriple):
    for name, a in t.generators.items():
        A = _dense(t.rep(a))
        if np.count_nonzero(A - np.diag(np.diagonal(A))):
            raise NonCommutativeAlgebra(f"generator {name} is not diagonal")


def spectral_distance(t: TwistedTriple, p: int, q: int, starts: int = 16, seed: int = 0,
                      step_tol: float = 1e-8, max_iter: int = 400) -> DistanceResult:
    """``sup{|f_p - f_q| : ||[D, f]|| <= 1}`` over real diagonal ``f``.

    Solved as ``1 / min{||[D, f]|| : f_p - f_q = 1}`` (a convex problem) by
    multi-start projected subgradient descent followed by a simplex polish.
    """
    _diag_operator_check(t)
    D = _dense(t.D)
    n = D.shape[0]
    if p == q:
        return DistanceResult(0.0, np.zeros(n), 0.0, 0, 0.0)
    free = [k for k in range(n) if k not in (p, q)]

    def build(x):
        f = np.zeros(n)
        f[p] = 1.0
        f[free] = x
        return f

    def objective(x):
        f = build(x)
        C = D * f[None, :] - f[:, None] * D
        return float(np.linalg.norm(C, 2))

    def subgrad(x):
        f = build(x)
        C = D * f[None, :] - f[:, None] * D
        u, s, vh = np.linalg.svd(C)
        uu, vv = u[:, 0], vh[0].conj()
        # d||C||/df_k = Re(u^* dC v), dC/df_k = D e_k e_k^T - e_k e_k^T D
        g = np.array([np.real(uu.conj() @ D[:, k] * vv[k] - uu[k].conj() * (D[k, :] @ vv)) for k in range(n)])
        return g[free]

    rng = np.random.default_rng(seed)
    best_x, best_val = None, np.inf
    m = len(free)
    for s in range(starts):
        x = np.zeros(m) if s == 0 else rng.uniform(-1.5, 2.5, size=m)
        val = objective(x)
        if m:
            step = 0.5
            for it in range(max_iter):
                g = subgrad(x)
                gn = np.linalg.norm(g)
                if gn == 0:
                    break
                x_new = x - step * g / gn
                v_new = objective(x_new)
                if v_new < val:
                    if np.linalg.norm(x_new - x) < step_tol:
                        x, val = x_new, v_new
                        break
                    x, val = x_new, v_new
                else:
                    step *= 0.5
                    if step < step_tol:
                        break
        if val < best_val:
            best_x, best_val = x, val
    if m:
        pol = optimize.minimize(objective, best_x, method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
        if pol.fun < best_val:
            best_x, best_val = pol.x, float(pol.fun)
    if best_val <= 1e-14:
        return DistanceResult(np.inf, build(best_x), 0.0, starts, best_val)
    f = build(best_x) / best_val
    activity = objective(best_x) / best_val
    return DistanceResult(1.0 / best_val, f, activity, starts, best_val)


def brute_force_distance(D, p: int, q: int, grid: int = 401, span: float = 3.0) -> float:
    """Grid oracle for dimension <= 3 (one free coordinate at most)."""
    D = _dense(D)
    n = D.shape[0]
    free = [k for k in range(n) if k not in (p, q)]
    if len(free) > 1:
        raise ValueError("brute force oracle only for dim <= 3")
    best = np.inf
    values = np.linspace(-span, span + 1, grid) if free else [None]
    for v in values:
        f = np.zeros(n)
        f[p] = 1.0
        if free:
            f[free[0]] = v
        C = D * f[None, :] - f[:, None] * D
        best = min(best, np.linalg.norm(C, 2))
    if free:
        # refine around the grid minimum with golden section
        def obj(v):
            f = np.zeros(n)
            f[p] = 1.0
            f[free[0]] = v
            return np.linalg.norm(D * f[None, :] - f[:, None] * D, 2)

        vs = np.linspace(-span, span + 1, grid)
        k = int(np.argmin([obj(v) for v in vs]))
        lo, hi = vs[max(k - 1, 0)], vs[min(k + 1, grid - 1)]
        res = optimize.minimize_scalar(obj, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        best = min(best, res.fun)
    return 1.0 / best


# ------------------------------------------------------------ finite model builders


def commutative_triple(D) -> TwistedTriple:
    """Functions on ``dim`` points acting diagonally; generators are the point projectors."""
    D = _dense(D)
    n = D.shape[0]
    gens = {f"p{k}": np.diag(np.eye(n)[k]).astype(complex) for k in range(n)}
    return TwistedTriple(generators=gens, D=D, truncation_meta={"model": "commutative", "points": n})


def two_point_triple(lam: float) -> TwistedTriple:
    return commutative_triple(np.array([[0.0, lam], [lam, 0.0]]))


def random_hermitian(rng, n, scale=1.0):
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (X + X.conj().T) / 2


def random_graded_triple(rng, half_dim: int, n_generators: int = 3, lipschitz_scale: float = 1.0) -> TwistedTriple:
    """``H = C^k + C^k``, ``gamma = diag(1, -1)``, block-diagonal algebra, odd invertible ``D``."""
    k = half_dim
    gamma = np.diag(np.concatenate([np.ones(k), -np.ones(k)])).astype(complex)
    while True:
        T = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k)) + 2 * np.eye(k)
        if np.linalg.cond(T) < 50:
            break
    D = np.zeros((2 * k, 2 * k), dtype=complex)
    D[k:, :k] = T
    D[:k, k:] = T.conj().T
    gens = {}
    for g in range(n_generators):
        a = np.zeros((2 * k, 2 * k), dtype=complex)
        a[:k, :k] = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
        a[k:, k:] = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
        gens[f"a{g}"] = lipschitz_scale * a
    return TwistedTriple(generators=gens, D=D, grading=gamma,
                         truncation_meta={"model": "finite_random", "half_dim": k})


def random_even_hermitian(rng, half_dim: int, scale: float = 0.3):
    k = half_dim
    h = np.zeros((2 * k, 2 * k), dtype=complex)
    h[:k, :k] = random_hermitian(rng, k, scale)
    h[k:, k:] = random_hermitian(rng, k, scale)
    return h


def random_perturbed_triple(rng, half_dim: int, n_generators: int = 3, scale: float = 0.3) -> TwistedTriple:
    t = random_graded_triple(rng, half_dim, n_generators)
    return conformal_perturb(t, random_even_hermitian(rng, half_dim, scale))


def random_block_element(rng, half_dim: int):
    k = half_dim
    a = np.zeros((2 * k, 2 * k), dtype=complex)
    a[:k, :k] = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    a[k:, k:] = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    return a


def geometric_shift_model(n: int, q: float, shift: int = 1):
    """``D = diag(q^k)``, ``k = 0..n-1`` and the cyclic shift ``U e_k = e_{k-shift}``.

    On interior indices ``U D U* = q^shift D``; the wrap-around entries carry
    the truncation defect.
    """
    D = np.diag(q ** np.arange(n, dtype=float)).astype(complex)
    U = np.roll(np.eye(n), -shift, axis=0).astype(complex)
    return D, U
