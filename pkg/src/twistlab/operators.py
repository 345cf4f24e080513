"""Dense (and diagonal-sparse) spectral calculus for truncated Hilbert spaces.

Operators are plain ``numpy`` arrays. Diagonal operators may also be given as
``scipy.sparse`` matrices; every spectral function keeps them diagonal and
sparse, which is what the Fourier models rely on at large truncation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg  # noqa: F401  (sp.linalg)

from .errors import NonHermitian, OutOfRange, SingularFunction, SingularOperator

KERNEL_POLICIES = ("reject", "drop_modes", "plus_one")
DEFAULT_KERNEL_POLICY = "drop_modes"
KERNEL_RTOL = 1e-10


def is_sparse(x) -> bool:
    return sp.issparse(x)


def as_operator(x) -> np.ndarray:
    """Validate a square operator and return it as a complex array (sparse kept)."""
    if sp.issparse(x):
        if x.shape[0] != x.shape[1]:
            raise ValueError(f"operator must be square, got shape {x.shape}")
        return x
    a = np.asarray(x, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"operator must be square, got shape {a.shape}")
    return a


def identity_like(x):
    n = x.shape[0]
    if sp.issparse(x):
        return sp.identity(n, dtype=complex, format="csr")
    return np.eye(n, dtype=complex)


def op_norm(x) -> float:
    """Operator (spectral) norm; diagonal sparse inputs handled without densifying."""
    if sp.issparse(x):
        if is_diagonal(x):
            d = x.diagonal()
            return float(np.max(np.abs(d))) if d.size else 0.0
        return float(sp.linalg.svds(x.tocsc(), k=1, return_singular_vectors=False)[0])
    if x.size == 0:
        return 0.0
    if min(x.shape) > 512:
        # top eigenvalue of the Gram matrix: ARPACK stalls on clustered singular values
        G = x.conj().T @ x if x.shape[0] >= x.shape[1] else x @ x.conj().T
        n = G.shape[0]
        w = sla.eigh(G, eigvals_only=True, subset_by_index=[n - 1, n - 1], driver="evr", check_finite=False)
        return float(np.sqrt(max(w[0], 0.0)))
    return float(np.linalg.norm(x, 2))


def hermitian_tolerance(H) -> float:
    scale = max(1.0, float(abs(H).max()) if H.shape[0] else 1.0)
    return 1e-10 * H.shape[0] * scale


def hermitian_defect(H) -> float:
    diff = H - H.conj().T
    if sp.issparse(diff):
        return float(abs(diff).max()) if diff.nnz else 0.0
    return float(np.max(np.abs(diff))) if diff.size else 0.0


def check_hermitian(H, tol: float | None = None) -> None:
    tol = hermitian_tolerance(H) if tol is None else tol
    defect = hermitian_defect(H)
    if defect > tol:
        raise NonHermitian(f"hermitian defect {defect:.3e} exceeds {tol:.3e}")


def is_diagonal(x) -> bool:
    if sp.issparse(x):
        coo = x.tocoo()
        return bool(np.all(coo.row == coo.col) or np.all(coo.data[coo.row != coo.col] == 0))
    return bool(np.count_nonzero(x - np.diag(np.diagonal(x))) == 0)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigen-decomposition of a hermitian operator, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source_dim: int

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Return ``sum_k values[k] v_k v_k^*``."""
        v = self.eigenvectors
        return (v * values) @ v.conj().T

    def reconstruction_error(self, H) -> float:
        return float(np.linalg.norm(self.reconstruct() - H))

    def gram_defect(self) -> float:
        v = self.eigenvectors
        return float(np.max(np.abs(v.conj().T @ v - np.eye(v.shape[1]))))


def eig_hermitian(H) -> SpectralDecomposition:
    """Spectral decomposition of a hermitian operator.

    Raises:
        NonHermitian: if ``H`` fails the hermitian check.
    """
    H = as_operator(H)
    check_hermitian(H)
    if sp.issparse(H):
        H = H.toarray()
    herm = 0.5 * (H + H.conj().T)
    w, v = np.linalg.eigh(herm)
    return SpectralDecomposition(eigenvalues=w, eigenvectors=v, source_dim=H.shape[0])


def kernel_mask(eigenvalues: np.ndarray, tol: float | None = None) -> np.ndarray:
    ev = np.asarray(eigenvalues)
    if tol is None:
        scale = max(1.0, float(np.max(np.abs(ev)))) if ev.size else 1.0
        tol = KERNEL_RTOL * scale
    return np.abs(ev) <= tol


def _check_policy(policy: str) -> None:
    if policy not in KERNEL_POLICIES:
        raise ValueError(f"unknown kernel policy {policy!r}; expected one of {KERNEL_POLICIES}")


def _apply_scalar(f: Callable, ev: np.ndarray, kernel_policy: str) -> np.ndarray:
    _check_policy(kernel_policy)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        vals = np.asarray(f(ev.astype(float) if np.isrealobj(ev) else ev), dtype=complex)
        if vals.ndim == 0:
            vals = np.full(ev.shape, complex(vals))
    bad = ~np.isfinite(vals)
    if np.any(bad):
        if kernel_policy == "reject":
            raise SingularFunction(f"function undefined at {int(bad.sum())} eigenvalue(s)")
        if kernel_policy == "drop_modes":
            vals[bad] = 0.0
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                vals[bad] = complex(np.asarray(f(np.array([1.0])), dtype=complex)[0])
    return vals


def matrix_function(H, f: Callable[[np.ndarray], np.ndarray], kernel_policy: str = "reject"):
    """Apply a scalar function through the spectral theorem.

    ``f`` receives the array of eigenvalues. Where it is not finite (for
    example ``1/x`` at ``0``) the kernel policy decides: ``reject`` raises,
    ``drop_modes`` sets the value to zero, ``plus_one`` evaluates at ``+1``,
    i.e. treats kernel modes as if the eigenvalue were one.
    """
    H = as_operator(H)
    if is_diagonal(H):
        d = np.real_if_close(H.diagonal())
        check_hermitian(H)
        vals = _apply_scalar(f, np.real(d), kernel_policy)
        if sp.issparse(H):
            return sp.diags(vals, format="csr")
        return np.diag(vals)
    dec = eig_hermitian(H)
    vals = _apply_scalar(f, dec.eigenvalues, kernel_policy)
    return dec.apply(vals)


def _sign_values(ev: np.ndarray, kernel_policy: str) -> np.ndarray:
    _check_policy(kernel_policy)
    ker = kernel_mask(ev)
    s = np.sign(ev).astype(complex)
    if np.any(ker):
        if kernel_policy == "reject":
            raise SingularOperator(f"{int(ker.sum())} kernel mode(s) under 'reject' policy")
        s[ker] = 0.0 if kernel_policy == "drop_modes" else 1.0
    return s


def sign_op(D, kernel_policy: str = DEFAULT_KERNEL_POLICY):
    """Phase ``F = D|D|^{-1}`` of a hermitian operator.

    Under ``drop_modes`` the kernel is mapped to zero (so ``F^2`` is the
    projector onto the retained space); under ``plus_one`` kernel modes get
    sign ``+1`` and ``F^2 = 1`` on the whole space.
    """
    D = as_operator(D)
    if is_diagonal(D):
        check_hermitian(D)
        s = _sign_values(np.real(D.diagonal()), kernel_policy)
        return sp.diags(s, format="csr") if sp.issparse(D) else np.diag(s)
    dec = eig_hermitian(D)
    return dec.apply(_sign_values(dec.eigenvalues, kernel_policy))


def abs_op(D):
    return matrix_function(D, np.abs)


def abs_power(D, z: complex, kernel_policy: str = DEFAULT_KERNEL_POLICY):
    """``|D|^{-z}`` on retained modes."""
    D = as_operator(D)
    if is_diagonal(D):
        check_hermitian(D)
        ev = np.real(D.diagonal())
        vals = _power_values(ev, z, kernel_policy)
        return sp.diags(vals, format="csr") if sp.issparse(D) else np.diag(vals)
    dec = eig_hermitian(D)
    return dec.apply(_power_values(dec.eigenvalues, z, kernel_policy))


def _power_values(ev: np.ndarray, z: complex, kernel_policy: str) -> np.ndarray:
    _check_policy(kernel_policy)
    ker = kernel_mask(ev)
    out = np.zeros(ev.shape, dtype=complex)
    good = ~ker
    out[good] = np.abs(ev[good]).astype(complex) ** (-z)
    if np.any(ker):
        if kernel_policy == "reject":
            raise SingularOperator(f"{int(ker.sum())} kernel mode(s) under 'reject' policy")
        if kernel_policy == "plus_one":
            out[ker] = 1.0
    return out


def inverse_op(D, kernel_policy: str = DEFAULT_KERNEL_POLICY):
    """``D^{-1}`` on retained modes (kernel handled by policy)."""
    D = as_operator(D)

    def inv(ev):
        ker = kernel_mask(ev)
        out = np.empty(ev.shape, dtype=complex)
        out[~ker] = 1.0 / ev[~ker]
        out[ker] = np.nan
        return out

    return matrix_function(D, inv, kernel_policy=kernel_policy)


def retained_projector(D):
    """Orthogonal projector onto the complement of ``ker D``."""
    return matrix_function(D, lambda ev: (~kernel_mask(ev)).astype(float))


def singular_values(T) -> np.ndarray:
    """Singular values in decreasing order."""
    T = as_operator(T)
    if sp.issparse(T):
        if is_diagonal(T):
            return np.sort(np.abs(T.diagonal()))[::-1]
        T = T.toarray()
    return np.linalg.svd(T, compute_uv=False)


def singular_partial_sums(T, N: int) -> float:
    """Sum of the ``N`` largest singular values of ``T``."""
    T = as_operator(T)
    if not 1 <= N <= T.shape[0]:
        raise OutOfRange(f"N={N} outside [1, {T.shape[0]}]")
    return float(np.sum(singular_values(T)[:N]))


def diagonal_in_eigenbasis(T, D) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal entries of ``T`` in the ``|D|`` eigenbasis, ordered by increasing ``|D|``.

    Kernel modes of ``D`` are dropped. Ties keep the natural basis order.
    Returns ``(abs_eigenvalues, diagonal_entries)``.
    """
    T = as_operator(T)
    D = as_operator(D)
    if is_diagonal(D):
        ev = np.real(np.asarray(D.diagonal()))
        diag = np.asarray(T.diagonal())
    else:
        dec = eig_hermitian(D)
        ev = dec.eigenvalues
        v = dec.eigenvectors
        Td = T.toarray() if sp.issparse(T) else T
        diag = np.einsum("ij,ik,kj->j", v.conj(), Td, v)
    keep = ~kernel_mask(ev)
    ev, diag = np.abs(ev[keep]), diag[keep]
    order = np.argsort(ev, kind="stable")
    return ev[order], diag[order]
