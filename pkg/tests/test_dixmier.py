import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from twistlab.dixmier import (
    ZetaSample,
    dixmier_estimate,
    geometric_schedule,
    lattice_zeta,
    residue_fit,
    zeta_samples,
    zeta_trace,
)
from twistlab.errors import DegenerateFit


def circle_abs_inverse(n):
    # |D|^{-1} on the circle: each |k| appears twice
    return 1.0 / ((n + 1) // 2)


@pytest.mark.parametrize("method", ["log_slope", "cesaro"])
def test_harmonic_sequence(method):
    est = dixmier_estimate(lambda n: 1.0 / n, geometric_schedule(1e3, 1e6), method)
    assert est.value == pytest.approx(1.0, rel=5e-3)
    assert est.fit_residual >= 0


@pytest.mark.parametrize("method", ["log_slope", "cesaro"])
def test_trace_class_vanishes(method):
    est = dixmier_estimate(lambda n: 1.0 / n**2, geometric_schedule(1e3, 1e5), method)
    assert abs(est.value) <= 1e-3


@pytest.mark.parametrize("method", ["log_slope", "cesaro"])
def test_circle_constant(method):
    est = dixmier_estimate(circle_abs_inverse, geometric_schedule(1e3, 1e5), method)
    assert est.value == pytest.approx(2.0, rel=5e-3)


def test_operator_forms():
    N = 3000
    d = 1.0 / np.arange(1, N + 1)
    sched = geometric_schedule(100, N, 6)
    est_sv = dixmier_estimate(sp.diags(d[::-1]), sched)
    assert est_sv.value == pytest.approx(1.0, rel=2e-2)
    n = np.arange(-N // 2, N // 2 + 1).astype(float)
    D = sp.diags(n)
    T = sp.diags(np.divide(1.0, np.abs(n), out=np.zeros_like(n), where=n != 0))
    est_diag = dixmier_estimate(T, geometric_schedule(100, N - 1, 6), D=D)
    assert est_diag.value == pytest.approx(2.0, rel=2e-2)


def test_degenerate_schedule():
    with pytest.raises(DegenerateFit):
        dixmier_estimate(lambda n: 1.0 / n, [10, 100])
    with pytest.raises(DegenerateFit):
        dixmier_estimate(lambda n: 1.0 / n, [10, 100, 50])


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(min_value=-5, max_value=5), min_size=1, max_size=20))
def test_finite_rank_vanishes(head):
    seq = np.zeros(2000)
    seq[: len(head)] = head
    est = dixmier_estimate(seq, geometric_schedule(100, 2000, 5))
    assert abs(est.value) <= 1e-3


def test_zeta_trace_examples():
    D = np.diag([1.0, 2.0])
    assert zeta_trace(np.eye(2), D, 1) == pytest.approx(1.5)
    assert zeta_trace(np.zeros((2, 2)), D, 1) == 0
    N = 2000
    n = np.arange(-N, N + 1).astype(float)
    val = zeta_trace(sp.identity(2 * N + 1), sp.diags(n), 2)
    basel = 2 * sum(1.0 / k**2 for k in range(1, N + 1))
    assert val == pytest.approx(basel, rel=1e-12)
    assert abs(val - np.pi**2 / 3) < 2e-3


def test_zeta_trace_linear():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(5, 5))
    D = X + X.T
    for _ in range(10):
        b1 = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        b2 = rng.normal(size=(5, 5))
        a, c = rng.normal(size=2)
        z = 0.7 + 0.3j
        lhs = zeta_trace(a * b1 + c * b2, D, z)
        rhs = a * zeta_trace(b1, D, z) + c * zeta_trace(b2, D, z)
        assert abs(lhs - rhs) <= 1e-12 * max(1, abs(lhs))


def test_residue_fit_pure_pole():
    zs = (0.1, 0.2, 0.3)
    est = residue_fit(ZetaSample(zs, tuple(1 / z for z in zs)), 0.0)
    assert abs(est.residue - 1) <= 1e-8


def test_residue_fit_entire():
    zs = tuple(0.05 * k for k in (-4, -3, -2, -1, 1, 2, 3, 4))
    est = residue_fit(ZetaSample(zs, tuple(np.exp(z) * np.cos(z) for z in zs)), 0.0)
    assert abs(est.residue) <= 1e-6


def test_residue_convention():
    zs = (0.4, 0.45, 0.55, 0.6)
    # Trace(|D|^{-2z}) for circle has pole at z=1/2 with residue 1 (half of 2)
    s = ZetaSample(zs, tuple(1 / (z - 0.5) for z in zs), convention="2z")
    est = residue_fit(s, 0.5)
    assert est.residue_as("z") == pytest.approx(2.0)


def test_lattice_zeta_matches_riemann():
    import mpmath

    w = np.full(500, 2.0)
    for z in (0.5, 1.5 + 0.2j, 3.0):
        assert abs(lattice_zeta(w, z) - 2 * complex(mpmath.zeta(z))) < 1e-10


def test_circle_zeta_residue():
    N = 4096
    w = np.full(N, 2.0)
    zs = [1 + 0.05 * k for k in (-3, -2, -1, 1, 2, 3)]
    est = residue_fit(ZetaSample(tuple(zs), tuple(lattice_zeta(w, z) for z in zs)), 1.0)
    assert abs(est.residue - 2) <= 0.02


def test_zeta_samples_convention():
    D = np.diag([1.0, 2.0, 4.0])
    s = zeta_samples(np.eye(3), D, [0.5], convention="2z")
    assert s.traces[0] == pytest.approx(1 + 0.5 + 0.25)
