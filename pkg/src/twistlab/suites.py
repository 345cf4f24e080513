"""Verification suites, each returning a ``VerificationReport``, plus parameter sweeps."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import characters as ch
from . import jlo
from .config import ScenarioConfig
from .errors import ConfigInvalid, ScenarioBuildFailed, TwistlabError
from .homology import Chain, boundary_chain, coboundary_cochain, connes_B, cyclicity_residual, pairing, random_matrix_cochain
from .report import VerificationReport, check


@dataclass(frozen=True)
class Suite:
    name: str
    kinds: tuple
    default: dict
    run: Callable[[ScenarioConfig, VerificationReport], None]
    about: str


SUITES: dict[str, Suite] = {}


def suite(name: str, kinds: tuple, about: str, **default):
    def deco(fn):
        SUITES[name] = Suite(name, kinds, {"kind": kinds[0], **default}, fn, about)
        return fn

    return deco


def default_config(name: str, **overrides) -> ScenarioConfig:
    if name not in SUITES:
        raise ConfigInvalid(f"unknown suite {name!r}; try list-suites")
    return ScenarioConfig(**{**SUITES[name].default, **overrides})


def run_suite(cfg: ScenarioConfig, name: str) -> VerificationReport:
    if name not in SUITES:
        raise ConfigInvalid(f"unknown suite {name!r}; try list-suites")
    s = SUITES[name]
    if cfg.kind not in s.kinds:
        raise ConfigInvalid(f"suite {name} runs on {s.kinds}, not {cfg.kind!r}")
    rep = VerificationReport(suite=name, scenario=cfg.kind, config=cfg.to_dict())
    t0 = time.perf_counter()
    try:
        s.run(cfg, rep)
    except ConfigInvalid:
        raise
    except TwistlabError as e:
        raise ScenarioBuildFailed(f"{name}: {type(e).__name__}: {e}") from e
    rep.wall_time = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------- exact q-Laurent suites


@suite("residue_trace", ("q_laurent",), "Res(PQ - QP) = 0 on random twisted symbols (exact)", N=128)
def _residue_trace(cfg, rep):
    from .crossed import q_laurent_context
    from .psdo import random_symbol, residue, symbol_context_from_crossed, symbol_multiply

    cctx = q_laurent_context(cfg.q_value)
    sctx = symbol_context_from_crossed(cctx, s=int(cfg.s), floor=int(cfg.param("floor", -12)))
    rng = np.random.default_rng(cfg.seed)
    pairs = int(cfg.param("pairs", 200))
    order = int(cfg.param("max_order", 3))
    nonzero = 0
    worst = 0
    for _ in range(pairs):
        P = random_symbol(sctx, rng, lambda r: cctx.random_element(r, 2), order)
        Q = random_symbol(sctx, rng, lambda r: cctx.random_element(r, 2), order)
        d = residue(symbol_multiply(P, Q) - symbol_multiply(Q, P))
        if d != 0:
            nonzero += 1
            worst = max(worst, abs(complex(d)))
    rep.add(check("residue trace", "Res(PQ) = Res(QP)", worst, 0.0, backend="exact", pairs=pairs, nonzero=nonzero))


@suite("twisted_derivation", ("q_laurent", "circle_crossed"), "cocycle, sigma, delta'_s, tau' clauses", N=128, K=1024, s=1.0)
def _twisted_derivation(cfg, rep):
    from .crossed import twisted_derivation_suite

    rng = np.random.default_rng(cfg.seed)
    if cfg.kind == "q_laurent":
        from .crossed import q_laurent_context

        ctx = q_laurent_context(cfg.q_value)
        rep.extend(twisted_derivation_suite(ctx, rng, n_pairs=int(cfg.param("pairs", 60)), s=int(cfg.s), tol=0.0))
    else:
        from .circle import circle_crossed

        sc = circle_crossed(cfg.N, cfg.K, cfg.beta)
        rep.extend(twisted_derivation_suite(sc.ctx, rng, n_pairs=int(cfg.param("pairs", 30)), s=cfg.s,
                                            tol=cfg.tol("numeric", 1e-8)))


# ---------------------------------------------------------------- circle suites


@suite("character", ("circle",), "Phi_F = 2 Psi_D = 2 lim Psi_t on u*^m (x) u^m", N=4096)
def _character(cfg, rep):
    t, fm = ch.circle_untwisted_triple(cfg.N)
    dx = ch.TraceFunctional("dixmier_estimator", analytic=True)
    g = ch.CutoffFunction()
    tval = float(cfg.param("t", 2.0**-9))
    for m in cfg.param("m", [1, 2, 3]):
        c = ch.circle_cycle(fm, m)
        phi = pairing(ch.chern_F(t, 1), c)
        X = ch.psi_operator(t, (fm.monomial(-m), fm.monomial(m)))
        psi, diag = dx.evaluate(X, t.D)
        pt = pairing(ch.psi_t(t, 1, g, tval), c)
        rep.add(check(f"Psi_D m={m}", "Psi_D(u*^m, u^m) = 2m", abs(psi - 2 * m) / (2 * m), cfg.tol("psi", 0.01),
                      backend="dixmier_estimator[analytic]", value=psi, flatness=diag["interior_flatness"]))
        rep.add(check(f"Phi_F = 2 Psi_D m={m}", "Phi_F(c) = 2 Psi_D(c)", abs(phi - 2 * psi) / abs(phi), cfg.tol("phi", 0.01),
                      backend="exact_trace|dixmier_estimator", value={"Phi_F": phi, "2Psi_D": 2 * psi}))
        rep.add(check(f"2 Psi_t m={m}", "Phi_F(c) = 2 lim Psi_t(c)", abs(2 * pt - phi) / abs(phi), cfg.tol("psi_t", 0.02),
                      backend="cutoff", value=2 * pt, t=tval))
    for m in cfg.param("rotation_m", [1]):
        tr, fmr, cr = ch.circle_rotation_cycle(min(cfg.N, 1024), m)
        r = ch.character_verify(tr, cr, dx, window=ch.interior_window(fmr, 4))
        for rec in r.records[2:]:
            rec.name = f"rotation {rec.name} m={m}"
            rep.add(rec)


@suite("dixmier", ("circle",), "Dixmier and zeta constants", N=4096)
def _dixmier(cfg, rep):
    from .dixmier import ZetaSample, geometric_schedule, dixmier_estimate, lattice_zeta, residue_fit

    sched = geometric_schedule(1e3, 1e5)
    est = dixmier_estimate(lambda n: 1.0 / ((n + 1) // 2), sched)
    rep.add(check("Tr_w |D|^-1", "Tr_w(|D|^-1) = 2", abs(est.value - 2) / 2, 0.005, backend="dixmier_estimator", value=est.value))
    w = 2.0 * np.ones(cfg.N)
    z = (1.05, 1.1, 1.15, 1.2, 1.25, 1.3)
    res = residue_fit(ZetaSample(z, tuple(lattice_zeta(w, zz) for zz in z)), 1.0)
    rep.add(check("zeta residue", "Res_{z=1} Trace(|D|^-z) = 2", abs(res.residue - 2) / 2, 0.01, backend="zeta_residue",
                  value=res.residue))
    tc = dixmier_estimate(lambda n: 1.0 / n**2, sched)
    rep.add(check("trace class", "Tr_w(trace class) = 0", abs(tc.value), 1e-3, backend="dixmier_estimator", value=tc.value))


@suite("twisted_boundedness", ("circle_crossed",), "||[D, aU]_sigma|| bounded, ||[D, aU]|| grows", N=64, K=512)
def _twisted_boundedness(cfg, rep):
    rows = boundedness_rows(cfg, cfg.param("sweep_N", [64, 128, 256, 512, 1024]))
    tw = [r["twisted_norm"] for r in rows]
    un = [r["untwisted_norm"] for r in rows]
    ratio = max(tw) / min(tw)
    growth = un[-1] / un[0]
    rep.add(check("twisted bounded", "sup_N ||[D, aU]_sigma|| / inf_N <= 1.5", max(0.0, ratio - 1.0), 0.5, backend="operator_norm",
                  value=tw))
    rep.add(check("untwisted grows", "||[D, aU]|| grows by >= 2x", max(0.0, 2.0 - growth), 0.0, backend="operator_norm",
                  value=un, growth=growth))


def boundedness_rows(cfg: ScenarioConfig, Ns) -> list[dict]:
    from .circle import circle_crossed
    from .operators import op_norm

    out = []
    for N in Ns:
        sc = circle_crossed(int(N), 8 * int(N), cfg.beta)
        f = sc.grid.trig({0: 1.0, 1: 0.5, -2: 0.25j})
        x = sc.ctx.basis(f, sc.phi(-1))
        out.append({"N": int(N), "twisted_norm": op_norm(sc.twisted_commutator(x, int(N))),
                    "untwisted_norm": op_norm(sc.commutator(x, int(N)))})
    return out


@suite("hypertrace", ("circle_crossed",), "Tr_w(T a D^-1) = Tr_w(sigma(a) T D^-1)", N=64, K=4096)
def _hypertrace(cfg, rep):
    from .circle import circle_crossed

    sc = circle_crossed(cfg.N, cfg.K, cfg.beta)
    rng = np.random.default_rng(cfg.seed)
    n_max = int(cfg.param("n_max", 4096))
    for i in range(int(cfg.param("pairs", 10))):
        f0 = sc.grid.random(rng, 3)
        f1 = sc.grid.random(rng, 3)
        g = {d: complex(*rng.normal(size=2)) for d in range(-3, 4)}
        r = ch.circle_hypertrace(sc, f0, f1, g, n_max)
        rep.add(check(f"hypertrace pair {i}", "Tr_w(T a D^-1) = Tr_w(sigma(a) T D^-1)", r["residual"], cfg.tol("hypertrace", 0.05),
                      backend="dixmier_estimator", value=[r["lhs"], r["rhs"]], fit_residual=r["fit_residual"]))


# ---------------------------------------------------------------- finite suites


@suite("finite_index", ("finite_random",), "Phi_(D,sigma) cocycle and index pairing", dim=4)
def _finite_index(cfg, rep):
    from .triples import random_block_element, random_perturbed_triple

    seeds = int(cfg.param("seeds", 20))
    cyc = cob = frac = 0.0
    mismatches = 0
    for k in range(seeds):
        rng = np.random.default_rng(cfg.seed + k)
        half = 4 + k % 5  # dims 8..16
        t = random_perturbed_triple(rng, half)
        els = [random_block_element(rng, half) / (2 * half) for _ in range(6)]
        phi = ch.chern_D_sigma(t, 2)
        cyc = max(cyc, cyclicity_residual(phi, [els[:3], els[3:]]))
        cob = max(cob, abs(coboundary_cochain(phi)(*els[:4])))
        for side in "+-":
            e = ch.random_idempotent(rng, half, int(rng.integers(0, half + 1)), int(rng.integers(0, half + 1)))
            r = ch.index_pair(t, e, side)
            v = r.cocycle_value
            frac = max(frac, abs(v - round(v.real)))
            mismatches += int(round(v.real) != r.index)
    rep.add(check("Phi_(D,sigma) cyclic", "Phi(a_n, a_0, ..) = (-1)^n Phi(a_0, .., a_n)", cyc, 1e-9, seeds=seeds))
    rep.add(check("b Phi_(D,sigma) = 0", "b Phi_(D,sigma) = 0", cob, 1e-9, seeds=seeds))
    rep.add(check("cocycle integrality", "|Phi^+-(e,..,e) - round| <= 1e-6", frac, 1e-6))
    rep.add(check("index = cocycle", "Index^+-[e] = Phi^+-_(D,sigma)(e, .., e)", mismatches, 0, backend="rank"))


@suite("proof_identities", ("finite_random",), "exact operator identities on finite scaling models", dim=3)
def _proof_identities(cfg, rep):
    rng = np.random.default_rng(cfg.seed)
    rep.extend(ch.proof_identity_suite(rng, int(cfg.param("instances", 100)), 2 * cfg.dim, cfg.tol("identity", 1e-10)))
    m = ch.random_scaling_model(rng, 2 * cfg.dim)
    a = rng.normal(size=(2 * cfg.dim,) * 2)
    a /= np.linalg.norm(a, 2)
    wrong = ch.proof_identity_residuals(m, a, a, wrong_sign=True)["twisted resolvent"]
    rep.add(check("negative control", "wrong sign in the twisted resolvent identity is detected", 0.0 if wrong > 0.1 else 1.0,
                  0.0, value=wrong))


@suite("homology", ("finite_random",), "b^2 = 0, B^2 = 0, bB + Bb = 0, adjunction", dim=3)
def _homology(cfg, rep):
    rng = np.random.default_rng(cfg.seed)
    d = cfg.dim
    one = np.eye(d)

    def unit(r):
        X = r.normal(size=(d, d)) + 1j * r.normal(size=(d, d))
        return X / np.linalg.norm(X, 2)

    worst = {"b^2": 0.0, "B^2": 0.0, "bB + Bb": 0.0, "adjunction": 0.0}
    for n in range(5):
        for _ in range(int(cfg.param("trials", 30))):
            phi = (1.0 / 3.0 ** (n + 1)) * random_matrix_cochain(rng, n, d)
            a = [unit(rng) for _ in range(n + 3)]
            worst["b^2"] = max(worst["b^2"], abs(coboundary_cochain(coboundary_cochain(phi))(*a)))
            if n >= 2:
                worst["B^2"] = max(worst["B^2"], abs(connes_B(connes_B(phi, one), one)(*a[: n - 1])))
            if n >= 1:
                r = coboundary_cochain(connes_B(phi, one))(*a[: n + 1]) + connes_B(coboundary_cochain(phi), one)(*a[: n + 1])
                worst["bB + Bb"] = max(worst["bB + Bb"], abs(r))
            c = Chain(n + 1, [(complex(rng.normal(), rng.normal()), tuple(unit(rng) for _ in range(n + 2))) for _ in range(3)])
            worst["adjunction"] = max(worst["adjunction"], abs(pairing(coboundary_cochain(phi), c) - pairing(phi, boundary_chain(c))))
    anchors = {"b^2": "b o b = 0", "B^2": "B o B = 0", "bB + Bb": "bB + Bb = 0", "adjunction": "<b phi, c> = <phi, b c>"}
    for k, v in worst.items():
        rep.add(check(k, anchors[k], v, 1e-10, degrees="0..4"))


@suite("jlo", ("finite_random",), "classical JLO (b,B) identity, brackets, constant term", dim=3)
def _jlo(cfg, rep):
    from .triples import random_block_element, random_graded_triple, random_perturbed_triple

    rng = np.random.default_rng(cfg.seed)
    k = cfg.dim
    t = random_graded_triple(rng, k)
    for q in (1, 3):
        samples = [[random_block_element(rng, k) / k for _ in range(q + 1)] for _ in range(3)]
        r = jlo.bB_residual(jlo.jlo_family(t), q, samples, np.eye(2 * k))
        rep.add(check(f"(b,B) q={q}", "b phi_(q-1) + B phi_(q+1) = 0", r, 1e-8, backend="exact_divided_differences"))
    a0 = random_block_element(rng, k) / k
    mu = 1.3
    w, V = np.linalg.eigh(t.D)
    ref = np.trace(t.grading @ a0 @ V @ np.diag(np.exp(-mu**2 * w**2)) @ V.conj().T)
    rep.add(check("q=0 bracket", "<a_0 U_0*> = Trace(gamma a_0 U_0* e^{-mu^2 D^2})", abs(jlo.twisted_jlo(t, [a0], mus=[mu]) - ref), 1e-12,
                  backend="eigenbasis"))
    ent = [a0] + [t.D @ x - x @ t.D for x in (random_block_element(rng, k) / k for _ in range(2))]
    ex = jlo.twisted_jlo(t, ent, [1.0, 0.8, 0.8])
    ad, _ = jlo.twisted_jlo_adaptive(t, ent, [1.0, 0.8, 0.8], tol=1e-12)
    rep.add(check("exact vs quadrature", "divided differences = conical Gauss-Jacobi", abs(ex - ad), 1e-8 * max(1, abs(ex)),
                  backend="conical_quadrature"))
    tp = random_perturbed_triple(rng, k)
    worst_b = worst_j = 0.0
    for q in (0, 1, 2, 3):
        a = [random_block_element(rng, k) / k for _ in range(q + 1)]
        fit = jlo.constant_term(lambda e: jlo.jlo_bracket_eps(tp, q, a, e))
        worst_b = max(worst_b, abs(fit.constant - jlo.eps_zero_limit(tp, q, a)))
        ex = tuple(q / 2 + j for j in range(0 if q else 1, 5))
        fj = jlo.constant_term(lambda e: jlo.jlo_cochain_eps(tp, q, a, e), exponents=ex)
        direct = jlo.eps_zero_limit(tp, 0, a[:1]) if q == 0 else 0.0
        worst_j = max(worst_j, abs(fj.constant - direct))
    rep.add(check("constant term (bracket)", "<..>_{eps^1/2 D}|_0 = Trace(gamma A_0 prod [D, A_i]_s)/q!", worst_b, 1e-6, backend="asymptotic_fit"))
    rep.add(check("constant term (J^q)", "J^q(eps^1/2 D)|_0 = lim_{eps->0} J^q(eps^1/2 D)", worst_j, 1e-6, backend="asymptotic_fit"))


@suite("distance", ("finite_random",), "two-point spectral distance 1/lambda", dim=1)
def _distance(cfg, rep):
    from .triples import brute_force_distance, spectral_distance, two_point_triple

    for lam in cfg.param("lambdas", [0.5, 1.0, 4.0]):
        t = two_point_triple(float(lam))
        d = spectral_distance(t, 0, 1, seed=cfg.seed)
        bf = brute_force_distance(t.D, 0, 1)
        rep.add(check(f"distance lambda={lam}", "d(p,q) = sup{|f_p - f_q| : ||[D,f]|| <= 1}", abs(d.distance - bf), 1e-6,
                      backend="projected_ascent", value=d.distance, exact=1 / float(lam)))


@suite("geometric_scaling", ("geometric_scaling",), "truncated geometric model: scaling defect and condition diagnostic", N=24, q="2")
def _geometric_scaling(cfg, rep):
    from .triples import TwistedTriple, geometric_shift_model, scaling_check

    q = float(cfg.q_value)
    D, U = geometric_shift_model(cfg.N, q)
    full = scaling_check(U, D)
    inner = scaling_check(U, D, window=slice(0, cfg.N - 1))
    rep.add(check("scaling defect (full)", "U D U* = mu(U) D", full.defect, 1e-8, backend="frobenius", gated=False, mu=full.mu))
    rep.add(check("scaling defect (interior)", "U D U* = mu(U) D on the interior window", inner.defect, 1e-8, backend="frobenius",
                  gated=False, mu=inner.mu))
    t = TwistedTriple(generators={}, D=D)
    a = np.diag(np.exp(-np.arange(cfg.N) / 3.0))
    term = ch.ConditionTerm(1.0, (U.conj().T,), a, U, q)
    try:
        rep.add(ch.condition_check(t, [term], schedule=tuple(2.0 ** -k for k in range(2, 14))))
    except TwistlabError as e:
        rep.add(check("condition", "condition on the cycle", float("nan"), 0.0, backend="cutoff_schedule", gated=False,
                      status=type(e).__name__))


# ---------------------------------------------------------------- sweeps

METRICS = {
    "twisted_norm": ("circle_crossed", "N"),
    "untwisted_norm": ("circle_crossed", "N"),
    "psi_t_error": ("circle", "t"),
    "dixmier_psi": ("circle", "N"),
}


def sweep(cfg: ScenarioConfig, parameter: str, values, metric: str) -> str:
    """CSV with one row per value and a trailing log-log slope row."""
    values = list(values)
    if not values:
        raise ConfigInvalid("sweep needs at least one value")
    if metric not in METRICS:
        raise ConfigInvalid(f"unknown metric {metric!r}; expected one of {sorted(METRICS)}")
    kind, param = METRICS[metric]
    if parameter != param:
        raise ConfigInvalid(f"metric {metric} sweeps {param!r}, not {parameter!r}")
    m = int(cfg.param("m", 1))
    if metric in ("twisted_norm", "untwisted_norm"):
        ys = [r[metric] for r in boundedness_rows(cfg, [int(v) for v in values])]
    elif metric == "psi_t_error":
        t, fm = ch.circle_untwisted_triple(cfg.N)
        c = ch.circle_cycle(fm, m)
        phi = pairing(ch.chern_F(t, 1), c)
        g = ch.CutoffFunction()
        ys = [abs(2 * pairing(ch.psi_t(t, 1, g, float(v)), c) - phi) for v in values]
    else:
        dx = ch.TraceFunctional("dixmier_estimator", analytic=True)
        ys = []
        for v in values:
            t, fm = ch.circle_untwisted_triple(int(v))
            ys.append(dx(ch.psi_operator(t, (fm.monomial(-m), fm.monomial(m))), t.D).real)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([parameter, metric])
    for x, y in zip(values, ys):
        w.writerow([x, f"{float(y):.12g}"])
    xs = np.log(np.asarray(values, dtype=float))
    yv = np.abs(np.asarray(ys, dtype=float))
    ok = yv > 0
    slope = float(np.polyfit(xs[ok], np.log(yv[ok]), 1)[0]) if ok.sum() >= 2 else float("nan")
    w.writerow(["slope", f"{slope:.6g}"])
    return buf.getvalue()
