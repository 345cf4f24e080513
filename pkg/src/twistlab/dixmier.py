"""Dixmier-trace and zeta-residue estimators.

The generalized limit behind a Dixmier trace is not constructive, so two
explicit extraction methods stand in for it:

* ``log_slope``: least-squares fit ``Trace_N = c log N + d`` over a schedule.
* ``cesaro``: the logarithmic Cesaro mean ``tau_Lambda`` of ``Trace_r / log r``
  (``Trace_r`` the piecewise-affine interpolation of the partial sums), fitted
  to ``c + a/L + b log(L)/L`` with ``L = log Lambda`` and extrapolated to ``c``.

Both report the fit residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath
import numpy as np

from .errors import DegenerateFit, OutOfRange, SingularOperator
from .operators import as_operator, diagonal_in_eigenbasis, eig_hermitian, is_diagonal, kernel_mask, singular_values

METHODS = ("log_slope", "cesaro")
DEFAULT_SCHEDULE = tuple(int(round(x)) for x in np.geomspace(1e3, 1e5, 9))


@dataclass(frozen=True)
class DixmierEstimate:
    value: complex | float
    slope_fit_window: tuple[int, int]
    fit_residual: float
    method: str
    intercept: complex | float = 0.0
    n_points: int = 0


def geometric_schedule(n_min: int, n_max: int, points: int = 9) -> list[int]:
    """Strictly increasing integer schedule, geometrically spaced."""
    vals = sorted({int(round(x)) for x in np.geomspace(n_min, n_max, points)})
    return vals


def _sequence_from_source(source, n_max: int, D=None) -> np.ndarray:
    if callable(source):
        idx = np.arange(1, n_max + 1)
        try:
            seq = np.asarray(source(idx))
            if seq.shape != idx.shape:
                raise ValueError
        except (TypeError, ValueError):
            seq = np.array([source(int(i)) for i in idx])
        return seq
    arr = np.asarray(source) if not hasattr(source, "tocsr") else None
    if arr is not None and arr.ndim == 1:
        seq = arr
    else:
        T = as_operator(source)
        if D is None:
            seq = singular_values(T)
        else:
            _, seq = diagonal_in_eigenbasis(T, D)
    if len(seq) < n_max:
        raise OutOfRange(f"schedule reaches N={n_max} but only {len(seq)} terms are available")
    return seq[:n_max]


def _clean(seq: np.ndarray):
    if np.iscomplexobj(seq) and np.max(np.abs(seq.imag), initial=0.0) == 0.0:
        return seq.real
    return seq


def _cesaro_means(seq: np.ndarray, lambdas: Sequence[int], nodes: int = 6) -> np.ndarray:
    """``tau_Lambda`` for each Lambda, with Gauss-Legendre per unit interval."""
    partial = np.concatenate([[0.0], np.cumsum(seq)])
    x, w = np.polynomial.legendre.leggauss(nodes)
    lam_max = max(lambdas)
    # integrand on [n, n+1]: (S_n + (r-n) mu_{n+1}) / (r log r); cells [e,3], [3,4], ...
    hi = np.arange(3, lam_max + 1, dtype=float)
    lo = hi - 1.0
    lo[0] = np.e
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    r = mid[:, None] + half[:, None] * x[None, :]
    n = np.floor(r).astype(int)
    n = np.clip(n, 1, len(seq) - 1)
    trace_r = partial[n] + (r - n) * seq[n]
    cell = (trace_r / (r * np.log(r))) @ w * half
    cum = np.concatenate([[0.0], np.cumsum(cell)])
    out = []
    for lam in lambdas:
        out.append(cum[int(lam) - 2] / np.log(lam))
    return np.array(out)


def dixmier_estimate(
    source,
    schedule: Sequence[int] = DEFAULT_SCHEDULE,
    method: str = "log_slope",
    D=None,
) -> DixmierEstimate:
    """Estimate ``Tr_omega`` of a sequence, a diagonal function or an operator.

    Args:
        source: callable ``n -> mu_n`` (1-based, vectorized or not), a 1-D
            array of terms, or an operator. Operators use singular values
            unless ``D`` is given, in which case the diagonal in the ``|D|``
            eigenbasis (increasing ``|D|``, kernel dropped) is summed.
        schedule: strictly increasing list of cut-offs ``N``.
        method: ``log_slope`` or ``cesaro``.

    Raises:
        DegenerateFit: fewer than three schedule points or non-increasing schedule.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    sched = [int(s) for s in schedule]
    if len(sched) < 3:
        raise DegenerateFit(f"schedule has {len(sched)} points; at least 3 required")
    if any(b <= a for a, b in zip(sched, sched[1:])) or sched[0] < 1:
        raise DegenerateFit("schedule must be strictly increasing positive integers")
    if method == "cesaro" and sched[0] < 3:
        raise DegenerateFit("cesaro schedule must start at N >= 3")
    seq = _clean(_sequence_from_source(source, sched[-1], D))
    logs = np.log(np.asarray(sched, dtype=float))
    if method == "log_slope":
        partial = np.cumsum(seq)[np.asarray(sched) - 1]
        A = np.column_stack([logs, np.ones_like(logs)])
        target = partial
    else:
        target = _cesaro_means(seq, sched)
        A = np.column_stack([np.ones_like(logs), 1.0 / logs, np.log(logs) / logs])
    coef, *_ = np.linalg.lstsq(A.astype(target.dtype), target, rcond=None)
    resid = target - A @ coef
    fit_residual = float(np.sqrt(np.mean(np.abs(resid) ** 2)))
    value, intercept = coef[0], coef[1]
    value = complex(value) if np.iscomplexobj(coef) else float(value)
    intercept = complex(intercept) if np.iscomplexobj(coef) else float(intercept)
    return DixmierEstimate(
        value=value,
        slope_fit_window=(sched[0], sched[-1]),
        fit_residual=fit_residual,
        method=method,
        intercept=intercept,
        n_points=len(sched),
    )


@dataclass(frozen=True)
class ZetaSample:
    """Samples of ``z -> Trace(b |D|^{-z})`` (``convention='z'``) or ``|D|^{-2z}``."""

    z_values: tuple
    traces: tuple
    convention: str = "z"

    def __post_init__(self):
        if len(self.z_values) != len(self.traces):
            raise ValueError("z_values and traces length differ")
        if self.convention not in ("z", "2z"):
            raise ValueError(f"unknown convention {self.convention!r}")


@dataclass(frozen=True)
class ResidueEstimate:
    z_values: tuple
    traces: tuple
    pole_location: complex
    residue: complex
    fit_residual: float
    convention: str = "z"
    analytic_coefficients: tuple = field(default_factory=tuple)

    def residue_as(self, convention: str) -> complex:
        """Residue rescaled to the other exponent convention.

        ``Trace(P|D|^{-2z})`` at ``z=p`` equals ``Trace(P|D|^{-w})`` at
        ``w=2z``, so its residue is half the ``w``-residue at ``2p``.
        """
        if convention == self.convention:
            return self.residue
        return 2 * self.residue if self.convention == "2z" else self.residue / 2


def zeta_trace(b, D, z: complex, kernel_policy: str = "drop_modes") -> complex:
    """``Trace(b |D|^{-z})`` over retained modes of ``D``."""
    b = as_operator(b)
    D = as_operator(D)
    if b.shape != D.shape:
        raise ValueError(f"shape mismatch {b.shape} vs {D.shape}")
    if is_diagonal(D):
        ev = np.real(np.asarray(D.diagonal()))
        diag = np.asarray(b.diagonal())
    else:
        dec = eig_hermitian(D)
        ev = dec.eigenvalues
        v = dec.eigenvectors
        bd = b.toarray() if hasattr(b, "toarray") else b
        diag = np.einsum("ij,ik,kj->j", v.conj(), bd, v)
    ker = kernel_mask(ev)
    if np.any(ker):
        if kernel_policy == "reject":
            raise SingularOperator("D has a kernel under 'reject' policy")
        if kernel_policy == "plus_one":
            extra = complex(np.sum(diag[ker]))
        else:
            extra = 0.0
    else:
        extra = 0.0
    good = ~ker
    return complex(np.sum(diag[good] * np.abs(ev[good]).astype(complex) ** (-z))) + extra


def zeta_samples(b, D, z_values: Sequence[complex], convention: str = "z", kernel_policy: str = "drop_modes") -> ZetaSample:
    factor = 2 if convention == "2z" else 1
    traces = tuple(zeta_trace(b, D, factor * z, kernel_policy) for z in z_values)
    return ZetaSample(z_values=tuple(complex(z) for z in z_values), traces=traces, convention=convention)


def lattice_zeta(weights: np.ndarray, z: complex, spacing: float = 1.0, tail_terms: int = 4, tail_window: int | None = None) -> complex:
    """Continued ``sum_{n>=1} w_n (spacing n)^{-z}`` from finitely many weights.

    The weights ``w_1..w_N`` are summed exactly; the tail ``n > N`` uses the
    fitted asymptotic expansion ``w_n ~ sum_j c_j n^{-j}`` (``j < tail_terms``)
    summed in closed form with Hurwitz zeta functions, which also provides the
    meromorphic continuation across ``Re z = 1``. Suited to truncations of
    operators whose spectrum is an arithmetic progression, such as ``-i d/dx``
    on the circle.
    """
    w = np.asarray(weights)
    N = len(w)
    if N < 2 * tail_terms + 2:
        raise DegenerateFit("too few weights for the tail fit")
    win = tail_window or max(2 * tail_terms + 2, N // 4)
    n_tail = np.arange(N - win + 1, N + 1, dtype=float)
    A = np.column_stack([n_tail ** (-j) for j in range(tail_terms)])
    coef, *_ = np.linalg.lstsq(A.astype(w.dtype), w[-win:], rcond=None)
    n = np.arange(1, N + 1, dtype=float)
    head = complex(np.sum(w * (spacing * n).astype(complex) ** (-z)))
    tail = 0j
    for j, c in enumerate(coef):
        if c == 0:
            continue
        tail += complex(c) * complex(mpmath.zeta(z + j, N + 1))
    return head + complex(spacing) ** (-z) * tail


def residue_fit(samples: ZetaSample, pole: complex, analytic_degree: int | None = None) -> ResidueEstimate:
    """Fit ``c/(z-p) + sum_j a_j (z-p)^j`` to samples and return ``c``.

    Raises:
        DegenerateFit: fewer than two samples, a sample at the pole, or more
            unknowns than samples.
    """
    z = np.asarray(samples.z_values, dtype=complex)
    f = np.asarray(samples.traces, dtype=complex)
    if len(z) < 2:
        raise DegenerateFit("at least two samples needed for a residue fit")
    dz = z - pole
    if np.min(np.abs(dz)) < 1e-14:
        raise DegenerateFit("a sample sits on the pole")
    deg = min(len(z) - 2, 6) if analytic_degree is None else analytic_degree
    if deg + 2 > len(z):
        raise DegenerateFit(f"{deg + 2} unknowns but {len(z)} samples")
    scale = float(np.max(np.abs(dz)))
    u = dz / scale
    A = np.column_stack([1.0 / u] + [u**j for j in range(deg + 1)])
    coef, *_ = np.linalg.lstsq(A, f, rcond=None)
    resid = f - A @ coef
    residue = coef[0] * scale
    analytic = tuple(complex(c) / scale**j for j, c in enumerate(coef[1:]))
    return ResidueEstimate(
        z_values=tuple(samples.z_values),
        traces=tuple(samples.traces),
        pole_location=complex(pole),
        residue=complex(residue),
        fit_residual=float(np.sqrt(np.mean(np.abs(resid) ** 2))),
        convention=samples.convention,
        analytic_coefficients=analytic,
    )
