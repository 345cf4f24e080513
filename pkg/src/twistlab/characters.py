"""Chern characters, local Hochschild cocycles and the character-formula pipeline.

Cochains here evaluate on algebra *elements* of a ``TwistedTriple``; the
operators are obtained with ``t.rep``. Traces are taken by an explicit backend:

* ``exact_trace``: the operator trace of the truncation,
* ``dixmier_estimator``: a Dixmier-trace estimate from the diagonal in the
  eigenbasis of ``D``, optionally extended past the truncation by the
  analytic form ``c_+- / |lambda|^p`` fitted on interior modes,
* ``zeta_residue``: residue at ``z = p`` of ``Trace(X |D|^-z)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .dixmier import DEFAULT_SCHEDULE, ZetaSample, dixmier_estimate, lattice_zeta, residue_fit
from .errors import ConditionFailed, Inconclusive, NotIdempotent, OddDegree, SingularBlock
from .homology import Chain, Cochain, boundary_chain, chain_probe_norm, pairing
from .operators import abs_op, abs_power, diagonal_in_eigenbasis, inverse_op, is_diagonal, matrix_function, sign_op
from .report import VerificationReport, check
from .triples import TwistedTriple

T_SCHEDULE = tuple(2.0 ** -k for k in range(3, 13))


def _tr(X) -> complex:
    if sp.issparse(X):
        return complex(X.diagonal().sum())
    return complex(np.trace(X))


def _dense(X):
    return X.toarray() if sp.issparse(X) else np.asarray(X)


def _gamma(t: TwistedTriple, X):
    return X if t.grading is None else t.grading @ X


# ---------------------------------------------------------------- operator bundle


class Bundle:
    """Functions of ``D`` needed by the cochains, computed once per triple."""

    def __init__(self, t: TwistedTriple, kernel_policy: str | None = None):
        pol = kernel_policy or t.kernel_policy
        self.t = t
        self.D = t.D
        self.F = sign_op(t.D, pol)
        self.absD = abs_op(t.D)
        self.Dinv = inverse_op(t.D, "drop_modes")
        self.absDinv = abs_power(t.D, 1, "drop_modes")

    def abs_inv_power(self, n: int):
        return abs_power(self.D, n, "drop_modes")

    def comm_F(self, x):
        return self.F @ x - x @ self.F

    def twisted_comm(self, a):
        """``[D, a]_sigma`` for an algebra element ``a``."""
        t = self.t
        return self.D @ t.rep(a) - t.rep(t.sigma(a)) @ self.D

    def delta_sigma(self, a):
        """``[|D|, a]_sigma``."""
        t = self.t
        return self.absD @ t.rep(a) - t.rep(t.sigma(a)) @ self.absD


_BUNDLES: dict = {}


def bundle(t: TwistedTriple, kernel_policy: str | None = None) -> Bundle:
    key = (id(t), kernel_policy)
    hit = _BUNDLES.get(key)
    if hit is not None and hit.t is t:
        return hit
    if len(_BUNDLES) > 16:
        _BUNDLES.clear()
    b = _BUNDLES[key] = Bundle(t, kernel_policy)
    return b


def _sigma_pow(t: TwistedTriple, a, k: int):
    for _ in range(abs(k)):
        a = t.sigma(a) if k > 0 else t.sigma.inverse(a)
    return a


# ---------------------------------------------------------------- trace backends


@dataclass(frozen=True)
class TraceFunctional:
    """Trace backend. ``kind`` in {exact_trace, dixmier_estimator, zeta_residue}."""

    kind: str = "exact_trace"
    schedule: tuple = DEFAULT_SCHEDULE
    method: str = "log_slope"
    analytic: bool = False
    power: int = 1
    margin: int = 16
    zeta_points: tuple = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3)

    def __post_init__(self):
        if self.kind not in ("exact_trace", "dixmier_estimator", "zeta_residue"):
            raise ValueError(f"unknown trace backend {self.kind!r}")

    def __call__(self, X, D) -> complex:
        return self.evaluate(X, D)[0]

    def evaluate(self, X, D) -> tuple:
        """``(value, diagnostics)``."""
        if self.kind == "exact_trace":
            return _tr(X), {}
        if self.kind == "dixmier_estimator":
            if self.analytic:
                seq, diag = analytic_diagonal_sequence(X, D, self.schedule[-1], self.power, self.margin)
            else:
                _, seq = diagonal_in_eigenbasis(X, D)
                diag = {}
            est = dixmier_estimate(seq, self.schedule, self.method)
            diag.update(fit_residual=est.fit_residual, window=est.slope_fit_window, method=est.method)
            return complex(est.value), diag
        # Tr_w(X) = Res_{z=0} Trace(X |D|^-z) for X of order -p
        return zeta_residue_at_zero(X, D, self.zeta_points, self.margin)


def zeta_residue_at_zero(X, D, z_points=(0.05, 0.1, 0.15, 0.2, 0.25, 0.3), margin: int = 16) -> tuple:
    """``Res_{z=0} Trace(X |D|^-z)`` for diagonal ``D`` with spectrum ``h n``.

    The last ``margin`` levels are dropped before the tail fit; they carry the
    truncation edge of multiplication operators.
    """
    ev, d = diagonal_in_eigenbasis(X, D)
    w = _pair_weights(ev, d)
    if margin and len(w) > 4 * margin:
        w = w[:-margin]
    spacing = float(np.min(ev))
    vals = tuple(lattice_zeta(w, z, spacing=spacing) for z in z_points)
    est = residue_fit(ZetaSample(tuple(z_points), vals), 0.0)
    return complex(est.residue), {"fit_residual": est.fit_residual}


def _pair_weights(ev: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Sum diagonal entries over degenerate ``|lambda|`` (arithmetic spectra ``k h``)."""
    h = float(np.min(ev))
    k = np.rint(ev / h).astype(int)
    w = np.zeros(int(k.max()), dtype=complex)
    np.add.at(w, k - 1, d)
    return w


def analytic_diagonal_sequence(X, D, n_terms: int, power: int = 1, margin: int = 16):
    """Diagonal of ``X`` in the ``|D|`` eigenbasis, extended by ``c_+- / |lambda|^power``.

    ``D`` must be diagonal with spectrum ``h n``, ``|n| <= N``. The constants
    ``c_+-`` are read off the interior modes ``|n| <= N - margin`` (last
    quarter) and their spread is returned as ``interior_flatness``.
    """
    if not is_diagonal(D):
        raise ValueError("analytic extension needs a diagonal D")
    ev = np.real(np.asarray(D.diagonal()))
    d = np.asarray(X.diagonal())
    keep = np.abs(ev) > 0
    ev, d = ev[keep], d[keep]
    order = np.argsort(np.abs(ev), kind="stable")
    ev, d = ev[order], d[order]
    h = float(np.min(np.abs(ev)))
    n = np.rint(np.abs(ev) / h).astype(int)
    N = int(n.max())
    hi = N - margin
    lo = max(1, (3 * hi) // 4)
    c = {}
    flat = 0.0
    for s in (1, -1):
        sel = (np.sign(ev) == s) & (n >= lo) & (n <= hi)
        vals = d[sel] * (np.abs(ev[sel]) ** power)
        c[s] = complex(np.mean(vals)) if vals.size else 0.0
        if vals.size:
            flat = max(flat, float(np.max(np.abs(vals - c[s]))))
    inner = n <= hi
    seq = list(d[inner])
    k = hi + 1
    while len(seq) < n_terms:
        lam = h * k
        seq.append(c[1] / lam**power)
        seq.append(c[-1] / lam**power)
        k += 1
    return np.asarray(seq[:n_terms]), {"interior_flatness": flat, "c_plus": c[1], "c_minus": c[-1], "exact_modes": int(inner.sum())}


EXACT = TraceFunctional("exact_trace")


# ---------------------------------------------------------------- cocycles


def chern_F(t: TwistedTriple, n: int, kernel_policy: str | None = None) -> Cochain:
    """``Phi_F(a_0..a_n) = Trace(gamma F [F,a_0] .. [F,a_n])``."""
    B = bundle(t, kernel_policy)

    def ev(*a):
        X = B.F
        for x in a:
            X = X @ B.comm_F(t.rep(x))
        return _tr(_gamma(t, X))

    return Cochain(n, ev, "Phi_F")


def chern_D_sigma(t: TwistedTriple, n: int) -> Cochain:
    """``Phi_{D,sigma}(a_0..a_n) = Trace(gamma D^-1[D,a_0]_s .. D^-1[D,a_n]_s)``, ``n`` even."""
    if n % 2:
        raise OddDegree(f"Phi_(D,sigma) needs even degree, got {n}")
    if t.grading is None:
        raise OddDegree("Phi_(D,sigma) needs a graded triple")
    B = bundle(t)
    Dinv = inverse_op(t.D, "reject")

    def ev(*a):
        X = None
        for x in a:
            f = Dinv @ B.twisted_comm(x)
            X = f if X is None else X @ f
        return _tr(_gamma(t, X))

    return Cochain(n, ev, "Phi_D_sigma")


def psi_operator(t: TwistedTriple, a) -> Any:
    """``gamma a_0 [D, s^-1(a_1)]_s .. [D, s^-n(a_n)]_s |D|^-n``."""
    B = bundle(t)
    n = len(a) - 1
    X = t.rep(a[0])
    for i, x in enumerate(a[1:], start=1):
        X = X @ B.twisted_comm(_sigma_pow(t, x, -i))
    X = X @ B.abs_inv_power(n)
    return _gamma(t, X)


def hochschild_psi(t: TwistedTriple, n: int, backend: TraceFunctional = EXACT) -> Cochain:
    def ev(*a):
        return backend(psi_operator(t, a), t.D)

    return Cochain(n, ev, f"Psi_D_sigma[{backend.kind}]")


# ---------------------------------------------------------------- index pairing


@dataclass(frozen=True)
class IndexPairing:
    index: int
    cocycle_value: complex
    side: str
    rank_e: int
    rank_f: int
    f_idempotent_defect: float


def _grading_blocks(gamma):
    g = _dense(gamma)
    if is_diagonal(g):
        d = np.real(np.diag(g))
        I = np.eye(len(d))
        return I[:, d > 0], I[:, d < 0]
    w, v = np.linalg.eigh(g)
    return v[:, w > 0], v[:, w < 0]


def _rank(M, rtol: float = 1e-8) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > rtol * max(1.0, s[0])))


def _orth(M, rtol: float = 1e-8):
    if M.size == 0:
        return M
    u, s, _ = np.linalg.svd(M)
    r = int(np.sum(s > rtol * max(1.0, s[0])))
    return u[:, :r]


def index_pair(t: TwistedTriple, e, side: str = "+", n: int = 2) -> IndexPairing:
    """``Index(f e : eH -> fH)`` on ``H_+-`` and ``Trace((e_+- - f_+-)^{n+1})``.

    ``f_+- = D_+-^-1 sigma(e)_-+ D_+-``; the cocycle value is
    ``Phi^+-_{D,sigma}(e, .., e)``, i.e. ``Trace(prod D^-1 (D e - sigma(e) D))``.
    """
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    if t.grading is None:
        raise OddDegree("index pairing needs a graded triple")
    E = _dense(t.rep(e))
    if np.max(np.abs(E @ E - E)) > 1e-10 * max(1.0, float(np.max(np.abs(E)))):
        raise NotIdempotent("e^2 != e")
    Vp, Vm = _grading_blocks(t.grading)
    D = _dense(t.D)
    S = _dense(t.rep(t.sigma(e)))
    if side == "+":
        V_in, V_out = Vp, Vm
    else:
        V_in, V_out = Vm, Vp
    Dpm = V_out.conj().T @ D @ V_in  # D_+- : H_+- -> H_-+
    if Dpm.shape[0] != Dpm.shape[1] or np.linalg.cond(Dpm) > 1e12:
        raise SingularBlock(f"D_{side} is not invertible (shape {Dpm.shape})")
    e_pm = V_in.conj().T @ E @ V_in
    s_mp = V_out.conj().T @ S @ V_out
    Dinv = np.linalg.inv(Dpm)
    f_pm = Dinv @ s_mp @ Dpm
    f_def = float(np.max(np.abs(f_pm @ f_pm - f_pm)))
    # f e restricted to e H, landing in f H
    Be, Bf = _orth(e_pm), _orth(f_pm)
    M = Bf.conj().T @ (f_pm @ e_pm @ Be)
    r = _rank(M)
    ker = Be.shape[1] - r
    coker = Bf.shape[1] - r
    factor = Dinv @ (Dpm @ e_pm - s_mp @ Dpm)
    X = np.linalg.matrix_power(factor, n + 1)
    return IndexPairing(index=int(ker - coker), cocycle_value=complex(np.trace(X)), side=side,
                        rank_e=Be.shape[1], rank_f=Bf.shape[1], f_idempotent_defect=f_def)


def random_idempotent(rng, half_dim: int, rank_plus: int, rank_minus: int, cond: float = 3.0):
    """Block-diagonal (hence even) idempotent ``S P S^-1`` with given block ranks."""
    blocks = []
    for r in (rank_plus, rank_minus):
        Q, _ = np.linalg.qr(rng.normal(size=(half_dim, half_dim)) + 1j * rng.normal(size=(half_dim, half_dim)))
        S = Q @ np.diag(np.linspace(1.0, cond, half_dim)) @ np.linalg.qr(rng.normal(size=(half_dim, half_dim)))[0]
        P = np.diag([1.0] * r + [0.0] * (half_dim - r))
        blocks.append(S @ P @ np.linalg.inv(S))
    Z = np.zeros((half_dim, half_dim))
    return np.block([[blocks[0], Z], [Z, blocks[1]]])


# ---------------------------------------------------------------- cutoff machinery


@dataclass(frozen=True)
class CutoffFunction:
    """``g(u) = 1 - S(2|u| - 1)`` with the smooth step ``S`` built from ``exp(-1/x)``."""

    label: str = "smoothstep"

    @staticmethod
    def _h(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = np.exp(-1.0 / x[pos])
        return out

    def step(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self._h(x), self._h(1.0 - x)
        return a / (a + b)

    def __call__(self, u):
        u = np.abs(np.asarray(u, dtype=float))
        return 1.0 - self.step(2.0 * u - 1.0)

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        x = 2.0 * np.abs(u) - 1.0
        a, b = self._h(x), self._h(1.0 - x)
        with np.errstate(divide="ignore", invalid="ignore"):
            da = np.where(x > 0, a / np.where(x > 0, x, 1.0) ** 2, 0.0)
            db = np.where(1.0 - x > 0, -b / np.where(1.0 - x > 0, 1.0 - x, 1.0) ** 2, 0.0)
            ds = (da * b - a * db) / (a + b) ** 2
        return -2.0 * np.sign(u) * ds

    def certify(self, grid: int = 20001) -> dict:
        from scipy.integrate import quad

        u = np.linspace(-2.0, 2.0, grid)
        g = self(u)
        inner = np.abs(u) <= 0.5
        outer = np.abs(u) >= 1.0
        integral = quad(lambda s: float(self.derivative(s)), 0.0, 2.0, points=[0.5, 1.0], limit=200)[0]
        fd = np.diff(g) / np.diff(u)
        mid = 0.5 * (u[1:] + u[:-1])
        return {
            "one_on_half": float(np.max(np.abs(g[inner] - 1.0))),
            "zero_past_one": float(np.max(np.abs(g[outer]))),
            "even": float(np.max(np.abs(g - self(-u)))),
            "integral_dg_plus_one": abs(integral + 1.0),
            "derivative_vs_fd": float(np.max(np.abs(fd - self.derivative(mid)))),
            "monotone_on_half_one": bool(np.all(np.diff(g[(u >= 0.5) & (u <= 1.0)]) <= 1e-15)),
        }


def cutoff_A(g: CutoffFunction, tval: float, D):
    """``A_t = g(t|D|)``."""
    if tval <= 0:
        raise ValueError("t must be positive")
    return matrix_function(D, lambda ev: g(tval * np.abs(ev)), kernel_policy="reject")


def psi_t(t: TwistedTriple, n: int, g: CutoffFunction, tval: float, kernel_policy: str | None = None) -> Cochain:
    """``-Trace(gamma a_0 [F,a_1] .. [F,a_{n-1}] F [A_t, a_n])``."""
    B = bundle(t, kernel_policy)
    A = cutoff_A(g, tval, t.D)

    def ev(*a):
        X = t.rep(a[0])
        for x in a[1:-1]:
            X = X @ B.comm_F(t.rep(x))
        an = t.rep(a[-1])
        X = X @ B.F @ (A @ an - an @ A)
        return -_tr(_gamma(t, X))

    return Cochain(n, ev, f"Psi_t[t={tval:g}]")


@dataclass(frozen=True)
class LimitEstimate:
    value: complex
    values: tuple
    schedule: tuple
    extrapolants: tuple
    deltas: tuple
    stable: bool


def richardson_limit(ts: Sequence[float], values: Sequence[complex], window: int = 4, slack: float = 1e-12) -> LimitEstimate:
    """Limit ``t -> 0`` by a degree ``window-1`` polynomial fit on sliding windows.

    The reported value uses the last ``window`` points; ``stable`` requires the
    successive extrapolant deltas to be non-increasing (up to ``slack``).
    """
    ts = np.asarray(ts, dtype=float)
    vals = np.asarray(values, dtype=complex)
    order = np.argsort(-ts)
    ts, vals = ts[order], vals[order]
    ex = []
    for s in range(0, len(ts) - window + 1):
        tt, vv = ts[s:s + window], vals[s:s + window]
        A = np.vander(tt / tt[0], window, increasing=True)
        coef = np.linalg.solve(A.astype(complex), vv)
        ex.append(coef[0])
    ex = np.asarray(ex)
    deltas = np.abs(np.diff(ex))
    scale = slack * max(1.0, float(np.max(np.abs(vals))))
    stable = bool(np.all(np.diff(deltas) <= scale)) if len(deltas) > 1 else True
    return LimitEstimate(complex(ex[-1]), tuple(vals), tuple(ts), tuple(ex), tuple(deltas), stable)


def usable_schedule(D, schedule=T_SCHEDULE, headroom: float = 0.75) -> tuple:
    """Drop ``t`` whose cutoff support ``|D| < 1/t`` reaches the truncation edge."""
    ev = np.abs(np.real(D.diagonal() if is_diagonal(D) else np.linalg.eigvalsh(_dense(D))))
    top = float(np.max(ev))
    return tuple(s for s in schedule if 1.0 / s <= headroom * top)


def psi_t_limit(t: TwistedTriple, n: int, cycle: Chain, g: CutoffFunction | None = None, schedule=T_SCHEDULE) -> LimitEstimate:
    g = g or CutoffFunction()
    sched = usable_schedule(t.D, schedule)
    if len(sched) < 4:
        raise Inconclusive(f"only {len(sched)} cutoff parameters fit inside the truncation")
    vals = [pairing(psi_t(t, n, g, s), cycle) for s in sched]
    return richardson_limit(sched, vals)


# ---------------------------------------------------------------- condition and hypertrace


@dataclass
class ConditionTerm:
    """One term ``w a_0U_0 x .. x a_nU_n``; ``last = (a_n, U_n)`` split as operators."""

    weight: complex
    head: tuple
    a_last: Any
    U_last: Any
    mu_last: float


def condition_check(t: TwistedTriple, terms: list, g: CutoffFunction | None = None, schedule=T_SCHEDULE, tol: float = 1e-6):
    """Compare ``lim Trace(R |D|^-(n-1) [A_t, a_n U_n])`` with ``lim Trace(R |D|^-(n-1) [A_t, a_n] U_n)``."""
    if not terms or all(abs(tm.mu_last - 1.0) <= 1e-12 for tm in terms):
        return check("condition", "mu(U_n) = 1 fast path", 0.0, tol, backend="exact", fast_path=True)
    g = g or CutoffFunction()
    B = bundle(t)
    lhs_vals, rhs_vals = [], []
    for s in schedule:
        A = cutoff_A(g, s, t.D)
        L = R_ = 0
        for tm in terms:
            Rop = _dense(t.rep(tm.head[0]) if not isinstance(tm.head[0], np.ndarray) else tm.head[0])
            for x in tm.head[1:]:
                Rop = Rop @ B.comm_F(x)
            Rop = -_gamma(t, Rop @ B.F)
            x_full = tm.a_last @ tm.U_last
            L = L + tm.weight * _tr(Rop @ (A @ x_full - x_full @ A))
            R_ = R_ + tm.weight * _tr(Rop @ (A @ tm.a_last - tm.a_last @ A) @ tm.U_last)
        lhs_vals.append(L)
        rhs_vals.append(R_)
    Ll = richardson_limit(schedule, lhs_vals)
    Rl = richardson_limit(schedule, rhs_vals)
    if not (Ll.stable and Rl.stable):
        raise Inconclusive(f"limits did not stabilize: deltas {Ll.deltas[-3:]}, {Rl.deltas[-3:]}")
    scale = max(float(np.max(np.abs(lhs_vals))), float(np.max(np.abs(rhs_vals))), 1e-300)
    r = abs(Ll.value - Rl.value) / scale
    return check("condition", "lim Trace(R|D|^-(n-1)[A_t, a_n U_n]) = lim Trace(R|D|^-(n-1)[A_t, a_n] U_n)",
                 r, tol, backend="cutoff_schedule", value=[Ll.value, Rl.value], fast_path=False, gated=False)


def hypertrace_residual(t: TwistedTriple, a, T, n: int, backend: TraceFunctional) -> float:
    """``|Tr(T a D^-n) - Tr(sigma^n(a) T D^-n)|`` relative, for operator triples."""
    Dn = inverse_op(t.D, "drop_modes")
    Dn_pow = Dn
    for _ in range(n - 1):
        Dn_pow = Dn_pow @ Dn
    A = t.rep(a)
    S = t.rep(_sigma_pow(t, a, n))
    lhs = backend(T @ A @ Dn_pow, t.D)
    rhs = backend(S @ T @ Dn_pow, t.D)
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)


def circle_hypertrace(sc, f0, f1, gcoef: dict, n_max: int = 4096, schedule=None, chunk: int = 256) -> dict:
    """Hypertrace check on the circle x| diffeo scenario, ``n = 1``.

    ``a = f0 + f1 (x) phi^-1`` (operator ``f0 + U f1``), ``T = g F`` with ``g`` a
    trigonometric polynomial and ``F = sign(D)``. Only the diagonals of ``T a``
    and ``sigma(a) T`` are needed; they are banded oscillatory sums evaluated
    in chunks on a grid fine enough for modes up to ``n_max``.
    """
    grid, ctx = sc.grid, sc.ctx
    ph_inv = sc.phi(-1)
    x = grid.x
    h, y = sc.column_data(f1, ph_inv)
    sig = ctx.sigma(ctx.element({(): f0, ph_inv: f1}))
    hs, _ = sc.column_data(sig.support.get(ph_inv, 0 * f1), ph_inv)
    psi = y - x
    c0 = grid.coeffs(f0)
    K = grid.K
    offs = sorted(gcoef)
    gc = np.array([gcoef[d] for d in offs])
    modes = np.concatenate([np.arange(1, n_max + 1), -np.arange(1, n_max + 1)])
    # (T a)_nn = sum_d g^(d) F_{n-d} a_{n-d,n};  (sigma(a) T)_nn = sum_d sigma(a)_{n,n+d} g^(d) F_n
    H_l = h[None, :] * np.exp(2j * np.pi * np.outer(offs, x))
    H_r = hs[None, :] * np.exp(2j * np.pi * np.outer(offs, y))
    f0_band = np.array([c0[(-d) % K] for d in offs])
    lhs = np.zeros(len(modes), dtype=complex)
    rhs = np.zeros(len(modes), dtype=complex)
    for s in range(0, len(modes), chunk):
        nn = modes[s:s + chunk]
        E = np.exp(2j * np.pi * nn[:, None] * psi[None, :])
        UL = E @ H_l.T / K + f0_band[None, :]
        UR = E @ H_r.T / K + f0_band[None, :]
        Fk = np.where(nn[:, None] - np.asarray(offs)[None, :] >= 0, 1.0, -1.0)
        Fn = np.where(nn >= 0, 1.0, -1.0)
        lhs[s:s + chunk] = (UL * Fk) @ gc
        rhs[s:s + chunk] = (UR @ gc) * Fn
    lam = 2 * np.pi * modes
    order = np.argsort(np.abs(modes), kind="stable")
    dl = (lhs / lam)[order]
    dr = (rhs / lam)[order]
    sched = schedule or tuple(sorted({int(v) for v in np.geomspace(max(16, n_max // 16), 2 * n_max, 9)}))
    el = dixmier_estimate(dl, sched)
    er = dixmier_estimate(dr, sched)
    res = abs(el.value - er.value) / max(abs(el.value), abs(er.value), 1e-300)
    return {"lhs": el.value, "rhs": er.value, "residual": res, "window": el.slope_fit_window,
            "fit_residual": max(el.fit_residual, er.fit_residual)}


# ---------------------------------------------------------------- zeta / eta / phi cochains


def zeta_eta_cochains(t: TwistedTriple, n: int, k: int, backend: TraceFunctional):
    """``(zeta^sigma_k, eta^sigma_k)``; ``eta`` is ``None`` for ``k = n``."""
    B = bundle(t)
    Dinv = B.Dinv

    def zeta(*a):
        X = t.rep(a[0])
        for x in a[1:k]:
            X = X @ B.comm_F(t.rep(x))
        X = X @ Dinv @ B.delta_sigma(a[k])
        for x in a[k + 1:]:
            X = X @ B.comm_F(t.rep(x))
        return n * backend(_gamma(t, X), t.D)

    def eta(*a):
        X = t.rep(a[0])
        for x in a[1:k]:
            X = X @ B.comm_F(t.rep(x))
        X = X @ B.comm_F(B.delta_sigma(t.sigma.inverse(a[k])))
        for x in a[k + 1:]:
            X = X @ B.comm_F(t.rep(t.sigma.inverse(x)))
        X = X @ Dinv
        return (-1) ** k * n * backend(_gamma(t, X), t.D)

    z = Cochain(n, zeta, f"zeta_{k}")
    e = Cochain(n - 1, eta, f"eta_{k}") if k < n else None
    return z, e


def relating_cochain(t: TwistedTriple, n: int, backend: TraceFunctional) -> Cochain:
    """``n Tr(gamma a_0 [F,a_1] .. [F,a_{n-1}] delta_s s^-1(a_n) D^-1)`` (the ``k = n`` limit cochain)."""
    B = bundle(t)

    def ev(*a):
        X = t.rep(a[0])
        for x in a[1:-1]:
            X = X @ B.comm_F(t.rep(x))
        X = X @ B.delta_sigma(t.sigma.inverse(a[-1])) @ B.Dinv
        return n * backend(_gamma(t, X), t.D)

    return Cochain(n, ev, "zeta_n'")


# ---------------------------------------------------------------- exact proof identities


@dataclass
class ScalingModel:
    """Finite model: ``D`` with spectrum away from 0, ``sigma = Ad V``, ``V = exp(kappa |D|)``, ``U`` with ``UDU* = D``."""

    D: np.ndarray
    V: np.ndarray
    Vinv: np.ndarray
    U: np.ndarray
    F: np.ndarray
    absD: np.ndarray

    def sigma(self, T, k: int = 1):
        for _ in range(abs(k)):
            T = self.V @ T @ self.Vinv if k > 0 else self.Vinv @ T @ self.V
        return T


def random_scaling_model(rng, dim: int = 6, kappa: float | None = None, identity_twist: bool = False) -> ScalingModel:
    Q, _ = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    ev = rng.choice([-1.0, 1.0], size=dim) * rng.uniform(1.0, 2.0, size=dim)
    D = Q @ np.diag(ev) @ Q.conj().T
    D = 0.5 * (D + D.conj().T)
    kappa = rng.uniform(-0.5, 0.5) if kappa is None else kappa
    if identity_twist:
        kappa = 0.0
    V = Q @ np.diag(np.exp(kappa * np.abs(ev))) @ Q.conj().T
    Vinv = Q @ np.diag(np.exp(-kappa * np.abs(ev))) @ Q.conj().T
    U = Q @ np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, size=dim))) @ Q.conj().T
    F = Q @ np.diag(np.sign(ev)) @ Q.conj().T
    absD = Q @ np.diag(np.abs(ev)) @ Q.conj().T
    return ScalingModel(D, V, Vinv, U, F, absD)


def proof_identity_residuals(m: ScalingModel, a, b, wrong_sign: bool = False) -> dict:
    D, F, A = m.D, m.F, m.absD
    Dinv = np.linalg.inv(D)
    Ainv = np.linalg.inv(A)

    def tc(X, x):
        return X @ x - m.sigma(x) @ X

    def dsig(x):
        return tc(A, x)

    def rel(lhs, rhs):
        return float(np.max(np.abs(lhs - rhs)) / max(1.0, float(np.max(np.abs(lhs)))))

    out = {}
    out["phase expansion"] = rel(F @ a - a @ F, Ainv @ (tc(D, a) - tc(A, a) @ F))
    U = m.U
    out["U[F,a] = [F,UaU*]U"] = rel(U @ (F @ a - a @ F), (F @ (U @ a @ U.conj().T) - (U @ a @ U.conj().T) @ F) @ U)
    sa = m.sigma(a, -1)
    sign = 1.0 if wrong_sign else -1.0
    out["twisted resolvent"] = rel(Dinv @ a - sa @ Dinv, sign * Dinv @ tc(D, sa) @ Dinv)

    def d2s2(x):
        return dsig(dsig(m.sigma(x, -2)))

    lhs = d2s2(a @ b)
    rhs = d2s2(a) @ m.sigma(b, -2) + 2 * dsig(m.sigma(a, -1)) @ dsig(m.sigma(b, -2)) + a @ d2s2(b)
    out["delta_sigma^2 Leibniz"] = rel(lhs, rhs)
    return out


ANCHORS = {
    "phase expansion": "[F,a] = |D|^-1([D,a]_s - [|D|,a]_s F)",
    "U[F,a] = [F,UaU*]U": "U[F,a] = [F,UaU*]U",
    "twisted resolvent": "D^-1 x - s^-1(x) D^-1 = -D^-1 [D, s^-1(x)]_s D^-1",
    "delta_sigma^2 Leibniz": "d_s^2 s^-2(ab) = d_s^2 s^-2(a) s^-2(b) + 2 d_s s^-1(a) d_s s^-2(b) + a d_s^2 s^-2(b)",
}


def proof_identity_suite(rng, instances: int = 100, dim: int = 6, tol: float = 1e-10, identity_twist: bool = False):
    worst = {k: 0.0 for k in ANCHORS}
    for _ in range(instances):
        m = random_scaling_model(rng, dim, identity_twist=identity_twist)
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        b = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        a /= np.linalg.norm(a, 2)
        b /= np.linalg.norm(b, 2)
        for k, v in proof_identity_residuals(m, a, b).items():
            worst[k] = max(worst[k], v)
    return [check(k, ANCHORS[k], v, tol, instances=instances) for k, v in worst.items()]


# ---------------------------------------------------------------- character identity checks


def boundary_residual(c: Chain, window=None, rng=None) -> float:
    """Size of ``b(c)``; degree-0 boundaries of matrix chains are summed directly.

    ``window`` (index array) restricts the summed operator to interior modes,
    where a truncated algebra still multiplies exactly.
    """
    bc = boundary_chain(c)
    if bc.degree == 0:
        S = None
        for w, (x,) in bc.terms:
            S = w * x if S is None else S + w * x
        S = _dense(S) if window is None or not sp.issparse(S) else S
        if window is not None:
            S = _dense(S[window][:, window]) if sp.issparse(S) else S[np.ix_(window, window)]
        return float(np.max(np.abs(S))) if S.size else 0.0
    return chain_probe_norm(bc, rng)


def character_verify(t: TwistedTriple, cycle: Chain, dixmier: TraceFunctional, window=None,
                     condition=None, cycle_tol: float = 1e-9, g: CutoffFunction | None = None,
                     schedule=T_SCHEDULE, tol: float = 0.02) -> VerificationReport:
    """Table of ``Phi_F(c)``, ``2 Psi_{D,sigma}(c)`` and ``2 lim Psi_t(c)``."""
    n = cycle.degree
    rep = VerificationReport(suite="character", scenario=t.truncation_meta.get("scenario", "triple"), config={"n": n})
    br = boundary_residual(cycle, window)
    rep.add(check("cycle", "b(c) = 0", br, cycle_tol, backend="exact"))
    if br > cycle_tol:
        raise ConditionFailed(f"not a Hochschild cycle: |b(c)| = {br:.3e}")
    cond = condition if condition is not None else check("condition", "mu(U_n) = 1 fast path", 0.0, 0.0, backend="exact", fast_path=True)
    rep.add(cond)
    if cond.gated and not cond.passed:
        raise ConditionFailed("condition on the cycle fails")
    phi = pairing(chern_F(t, n), cycle)
    psi = pairing(hochschild_psi(t, n, dixmier), cycle)
    lim = psi_t_limit(t, n, cycle, g, schedule)
    scale = max(abs(phi), 1e-300)
    rep.add(check("Phi_F vs 2 Psi_D", "Phi_F(c) = 2 Psi_(D,sigma)(c)", abs(phi - 2 * psi) / scale, tol,
                  backend=f"exact_trace|{dixmier.kind}", value={"Phi_F": phi, "2Psi": 2 * psi}))
    rep.add(check("Phi_F vs 2 lim Psi_t", "Phi_F(c) = 2 lim_t Psi_t(c)", abs(phi - 2 * lim.value) / scale, tol,
                  backend="cutoff_schedule", value={"2limPsi_t": 2 * lim.value, "stable": lim.stable}))
    return rep


# ---------------------------------------------------------------- circle helpers


def circle_untwisted_triple(N: int):
    """``R/2piZ`` truncation with trigonometric-polynomial elements as sparse matrices."""
    from .circle import circle_model

    fm = circle_model(N)
    D = fm.D()
    t = TwistedTriple(generators={"u": fm.monomial(1), "u*": fm.monomial(-1)}, D=D, kernel_policy="plus_one",
                      star=lambda a: a.conj().T, truncation_meta={"scenario": f"circle N={N}", "N": N})
    return t, fm


def circle_cycle(fm, m: int) -> Chain:
    return Chain.single(fm.monomial(-m), fm.monomial(m))


def interior_window(fm, margin: int):
    return np.nonzero(np.abs(fm.modes) <= fm.N - margin)[0]


def circle_rotation_cycle(N: int, m: int, theta: float = 0.7):
    """Circle x| rotation: ``x = U u^m`` with ``U e_n = e^{-i n theta} e_n`` and the cycle ``x^-1 (x) x``.

    ``U`` commutes with ``D`` (``mu(U) = 1``), so the twist is trivial while ``U != 1``.
    """
    t, fm = circle_untwisted_triple(N)
    U = sp.diags(np.exp(-1j * fm.modes * theta)).tocsr()
    x = U @ fm.monomial(m)
    xinv = fm.monomial(-m) @ U.conj().T
    t.truncation_meta["scenario"] = f"circle x| rotation N={N}"
    return t, fm, Chain.single(xinv, x)
