"""Circle scenarios: truncated Fourier models and the circle x| diffeomorphism crossed product.

Two normalizations are used.

* ``FourierModel`` with ``freq_scale=1`` is the circle ``R/2piZ`` with
  ``D = (1/i) d/dx`` diagonal with eigenvalues ``n`` on ``e^{inx}``; the
  unitary ``u = e^{ix}`` is the shift ``e_n -> e_{n+1}``.
* The crossed scenario lives on ``R/Z`` with ``e_n = e^{2 pi i n x}`` and
  ``D = (1/i) d/dx`` (eigenvalues ``2 pi n``). Functions are sampled on a
  uniform grid of ``K`` points; composition with a diffeomorphism evaluates
  the trigonometric interpolant at the displaced points.

Group: free words in named generators, ``phi_beta(x) = x + beta/(2 pi) sin(2 pi x)``
and rotations, acting on functions by ``a . g = a o g`` with ``gh = g o h``.
``j(g) = g'`` and ``rho(g) xi = ((g^-1)')^{1/2} xi o g^-1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .crossed import CoefficientAlgebra, CrossedContext, CrossedElement, GroupAction, OneCocycle
from .errors import NotADiffeo, NotCovariant
from .report import check

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------- untwisted Fourier model


@dataclass(frozen=True)
class FourierModel:
    """Modes ``|n| <= N``; ``D`` has eigenvalues ``freq_scale * n``."""

    N: int
    freq_scale: float = 1.0

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    @property
    def dim(self) -> int:
        return 2 * self.N + 1

    def D(self):
        return sp.diags(self.freq_scale * self.modes.astype(float)).tocsr()

    def multiplication(self, coeffs: dict):
        """Compression of multiplication by ``sum_k c_k e_k``: entries ``c_{m-n}``."""
        n = self.dim
        diags, offsets = [], []
        for k, c in coeffs.items():
            if abs(k) >= n or c == 0:
                continue
            diags.append(np.full(n - abs(k), complex(c)))
            offsets.append(-k)  # row m = col + k
        if not diags:
            return sp.csr_matrix((n, n), dtype=complex)
        return sp.diags(diags, offsets, shape=(n, n), dtype=complex).tocsr()

    def monomial(self, k: int):
        return self.multiplication({k: 1.0})

    def from_samples(self, samples: np.ndarray):
        """Dense compression of multiplication by a sampled periodic function."""
        c = np.fft.fft(samples) / len(samples)
        K = len(samples)
        m = self.modes
        diff = (m[:, None] - m[None, :]) % K
        return c[diff]


def circle_model(N: int) -> FourierModel:
    return FourierModel(N, 1.0)


# ---------------------------------------------------------------- diffeomorphisms


@dataclass(frozen=True)
class Diffeo:
    """Lift ``R -> R`` of an orientation preserving circle diffeomorphism (``R/Z``)."""

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    finv: Callable[[np.ndarray], np.ndarray]


def beta_diffeo(beta: float, name: str = "phi") -> Diffeo:
    """``phi(x) = x + beta/(2 pi) sin(2 pi x)``, ``phi' = 1 + beta cos(2 pi x)``."""
    if not abs(beta) < 1:
        raise NotADiffeo(f"|beta| = {abs(beta)} >= 1: phi' vanishes somewhere")
    c = beta / TWO_PI

    def f(x):
        return x + c * np.sin(TWO_PI * x)

    def df(x):
        return 1.0 + beta * np.cos(TWO_PI * x)

    def finv(y):
        # Newton from y; phi' >= 1 - |beta| > 0 keeps it monotone
        x = np.array(y, dtype=float, copy=True)
        for _ in range(60):
            step = (f(x) - y) / df(x)
            x -= step
            if np.max(np.abs(step), initial=0.0) < 1e-15:
                break
        return x

    return Diffeo(name, f, df, finv)


def rotation(theta: float, name: str = "rot") -> Diffeo:
    return Diffeo(name, lambda x: x + theta, lambda x: np.ones_like(np.asarray(x, dtype=float)), lambda y: y - theta)


class DiffeoGroup:
    """Free group on named diffeomorphisms; elements are reduced words.

    A word ``((g1, e1), (g2, e2), ...)`` is the composition ``g1^e1 o g2^e2 o ...``.
    """

    def __init__(self, generators: list[Diffeo], max_word: int = 2):
        self.generators = {g.name: g for g in generators}
        self.names = [g.name for g in generators]
        self.max_word = max_word
        self.identity = ()

    @staticmethod
    def reduce(word) -> tuple:
        out: list = []
        for letter in word:
            if out and out[-1][0] == letter[0] and out[-1][1] == -letter[1]:
                out.pop()
            else:
                out.append(letter)
        return tuple(out)

    def compose(self, g, h) -> tuple:
        return self.reduce(tuple(g) + tuple(h))

    def inverse(self, g) -> tuple:
        return tuple((n, -e) for n, e in reversed(g))

    def generator(self, name: str, e: int = 1) -> tuple:
        return ((name, e),)

    def evaluate(self, g, x):
        """``(g(x), g'(x))`` for the lifted composition."""
        y = np.asarray(x, dtype=float)
        d = np.ones_like(y)
        for name, e in reversed(g):
            gen = self.generators[name]
            if e == 1:
                d = d * gen.df(y)
                y = gen.f(y)
            else:
                z = gen.finv(y)
                d = d / gen.df(z)
                y = z
        return y, d

    def random(self, rng) -> tuple:
        length = int(rng.integers(0, self.max_word + 1))
        word = [(self.names[int(rng.integers(len(self.names)))], int(rng.choice([-1, 1]))) for _ in range(length)]
        return self.reduce(word)


# ---------------------------------------------------------------- sampled functions on R/Z


class SampledCircle:
    """Periodic functions sampled at ``x_k = k/K``."""

    def __init__(self, K: int, band_tol: float = 1e-17):
        if K % 2:
            raise ValueError("K must be even")
        self.K = K
        self.x = np.arange(K) / K
        self.freqs = np.fft.fftfreq(K, 1.0 / K).astype(int)
        self.band_tol = band_tol

    def coeffs(self, f):
        return np.fft.fft(f) / self.K

    def trig(self, coeffs: dict):
        out = np.zeros(self.K, dtype=complex)
        for k, c in coeffs.items():
            out += c * np.exp(1j * TWO_PI * k * self.x)
        return out

    def derivative(self, f):
        """``f'`` spectrally; the Nyquist mode is dropped."""
        c = self.coeffs(f)
        n = self.freqs.astype(float)
        n[self.K // 2] = 0.0
        return np.fft.ifft(1j * TWO_PI * n * c) * self.K

    def evaluate(self, f, y: np.ndarray):
        """Trigonometric interpolant of ``f`` at points ``y``, using only significant modes."""
        c = self.coeffs(f)
        c[self.K // 2] = 0.0
        mags = np.abs(c)
        top = float(np.max(mags, initial=0.0))
        if top == 0.0:
            return np.zeros(len(y), dtype=complex)
        keep = np.nonzero(mags > self.band_tol * top)[0]
        B = int(np.max(np.abs(self.freqs[keep])))
        z = np.exp(1j * TWO_PI * np.asarray(y))
        out = np.full(len(y), c[0], dtype=complex)
        zp = np.ones_like(z)
        zm = np.ones_like(z)
        zc = z.conj()
        for k in range(1, B + 1):
            zp = zp * z
            zm = zm * zc
            out += c[k] * zp + c[-k] * zm
        return out

    def random(self, rng, deg: int = 4, scale: float = 1.0):
        coeffs = {k: scale * complex(rng.normal(), rng.normal()) / (1 + abs(k)) ** 2 for k in range(-deg, deg + 1)}
        return self.trig(coeffs)

    def mean(self, f):
        return complex(np.mean(f))


@dataclass(frozen=True)
class CircleConfig:
    N: int = 128
    K: int = 1024
    beta: float = 0.3
    theta: float = float((np.sqrt(5) - 1) / 2)
    s: float = 0.5
    deg: int = 4
    max_word: int = 2


class CircleCrossed:
    """The circle x| diffeomorphism scenario bundle (context, grid, group)."""

    def __init__(self, cfg: CircleConfig = CircleConfig(), generators: list[Diffeo] | None = None):
        if cfg.K < 4 * cfg.N:
            raise ValueError(f"K={cfg.K} must be at least 4N={4 * cfg.N}")
        self.cfg = cfg
        self.grid = SampledCircle(cfg.K)
        gens = generators if generators is not None else [beta_diffeo(cfg.beta), rotation(cfg.theta)]
        self.group = DiffeoGroup(gens, cfg.max_word)
        self._eval_cache: dict = {}
        self.ctx = self._context()

    # group evaluation on the grid, cached per word
    def on_grid(self, g):
        v = self._eval_cache.get(g)
        if v is None:
            v = self._eval_cache[g] = self.group.evaluate(g, self.grid.x)
        return v

    def act(self, a, g):
        if not g:
            return a
        y, _ = self.on_grid(g)
        return self.grid.evaluate(a, y)

    def _context(self) -> CrossedContext:
        grid, group = self.grid, self.group

        def j(g):
            return self.on_grid(g)[1].astype(complex)

        def power(g, s):
            return (self.on_grid(g)[1] ** float(s)).astype(complex)

        algebra = CoefficientAlgebra(
            label=f"C(S^1) sampled K={grid.K}",
            one=np.ones(grid.K, dtype=complex),
            zero=np.zeros(grid.K, dtype=complex),
            exact=False,
            is_zero=lambda a: not np.any(a),
            distance=lambda a, b: float(np.max(np.abs(a - b))),
            star=np.conj,
            is_central=lambda a: True,
            is_invertible=lambda a: bool(np.min(np.abs(a)) > 0),
            random=lambda rng: grid.random(rng, self.cfg.deg),
        )
        action = GroupAction(
            label="Diff+(S^1) words by composition",
            identity=group.identity,
            compose=group.compose,
            inverse=group.inverse,
            act=self.act,
            random=group.random,
        )
        cocycle = OneCocycle(j=j, power=power, label="g'")
        ctx = CrossedContext(algebra, action, cocycle, delta=lambda f: grid.derivative(f) / 1j, tau=grid.mean,
                             label=f"circle x| diffeo beta={self.cfg.beta}")
        return ctx

    def phi(self, e: int = 1):
        return self.group.generator(self.group.names[0], e)

    # ---------------------------------------------------------- representation on |n| <= N

    def _modes(self, N):
        return np.arange(-N, N + 1)

    def compress_columns(self, h, y, n_cols: int, n_rows: int, chunk: int = 256):
        """``M[m, n] = (1/K) sum_x e^{-2 pi i m x} h(x) e^{2 pi i n y(x)}``, ``|m| <= n_rows``, ``|n| <= n_cols``."""
        K = self.grid.K
        if 2 * n_rows + 1 > K:
            raise ValueError("too many output rows for the grid")
        cols = self._modes(n_cols)
        rows = self._modes(n_rows) % K
        out = np.empty((len(rows), len(cols)), dtype=complex)
        for s in range(0, len(cols), chunk):
            c = cols[s:s + chunk]
            block = h[None, :] * np.exp(1j * TWO_PI * c[:, None] * y[None, :])
            F = np.fft.fft(block, axis=1) / K
            out[:, s:s + chunk] = F[:, rows].T
        return out

    def column_data(self, a, g):
        """Multiplier and phase of ``rho(g) pi(a) e_n = h e^{2 pi i n y}``."""
        ginv = self.group.inverse(g)
        y, dy = self.on_grid(ginv)
        h = np.sqrt(dy) * self.act(a, ginv)
        return h, y

    def represent(self, x: CrossedElement, N: int, n_rows: int | None = None):
        """Compression of ``pi'(x) = sum_g rho(g) pi(a_g)`` to modes ``|n| <= N``."""
        n_rows = N if n_rows is None else n_rows
        out = np.zeros((2 * n_rows + 1, 2 * N + 1), dtype=complex)
        for g, a in x.support.items():
            h, y = self.column_data(a, g)
            out += self.compress_columns(h, y, N, n_rows)
        return out

    def rho(self, g, N: int, n_rows: int | None = None):
        return self.represent(self.ctx.basis(self.ctx.algebra.one, g), N, n_rows)

    def pi(self, f, N: int, n_rows: int | None = None):
        n_rows = N if n_rows is None else n_rows
        c = self.grid.coeffs(f)
        K = self.grid.K
        diff = (self._modes(n_rows)[:, None] - self._modes(N)[None, :]) % K
        return c[diff]

    def D(self, N: int):
        return TWO_PI * self._modes(N).astype(float)

    def unitarity_defect(self, g=None, N: int | None = None) -> float:
        """Quadrature Gram defect of the columns ``rho(g) e_n``, ``|n| <= N``."""
        g = self.phi() if g is None else g
        N = self.cfg.N if N is None else N
        h, y = self.column_data(self.ctx.algebra.one, g)
        cols = self._modes(N)
        V = h[None, :] * np.exp(1j * TWO_PI * cols[:, None] * y[None, :])
        G = (V.conj() @ V.T) / self.grid.K
        return float(np.max(np.abs(G - np.eye(len(cols)))))

    def covariance_residual(self, f, g, N: int | None = None, mid: int | None = None) -> float:
        """``pi(f o g)`` against ``rho(g^-1) pi(f) rho(g)`` on modes ``|n| <= N``."""
        N = self.cfg.N if N is None else N
        mid = 2 * N + 32 if mid is None else mid
        lhs = self.pi(self.act(f, g), N)
        right = self.rho(g, N, mid)
        middle = self.pi(f, mid, mid)
        left = self.compress_columns(*self.column_data(self.ctx.algebra.one, self.group.inverse(g)), mid, N)
        rhs = left @ middle @ right
        return float(np.max(np.abs(lhs - rhs)))

    # ---------------------------------------------------------- operators of the twisted triple

    def twisted_commutator(self, x: CrossedElement, N: int):
        """``P [D, x]_sigma P = D_N M - M_sigma D_N`` (exact for diagonal ``D``)."""
        d = self.D(N)
        M = self.represent(x, N)
        Ms = self.represent(self.ctx.sigma(x), N)
        return d[:, None] * M - Ms * d[None, :]

    def commutator(self, x: CrossedElement, N: int):
        d = self.D(N)
        M = self.represent(x, N)
        return d[:, None] * M - M * d[None, :]

    def twisted_commutator_oracle(self, f, N: int):
        """Closed form for ``x = f (x) phi^-1``: ``[D, x]_sigma = (delta F + F delta(phi')/(2 phi')) U``
        with ``U = rho(phi^-1)``, ``F = f o phi``.
        """
        ctx = self.ctx
        ph = self.phi()
        F = self.act(f, ph)
        dphi = ctx.cocycle.j(ph)
        mult = ctx.delta(F) + F * ctx.delta(dphi) / (2 * dphi)
        # mult U = U (mult o phi^-1), i.e. the element (mult o phi^-1) (x) phi^-1
        return self.represent(ctx.basis(self.act(mult, self.phi(-1)), self.phi(-1)), N)

    def twisted_connection_residual(self, g, s=None, N: int | None = None, test: int = 8) -> float:
        """``D rho(g) = rho(g)((s-1) pi(delta J) + D pi(J))``, ``J = j(g^-1).g``, on test modes ``|n| <= test``.

        The right side is formed through modes ``|k| <= N``, so the residual
        measures truncation and decays as ``N`` grows.
        """
        s = self.cfg.s if s is None else s
        N = self.cfg.N if N is None else N
        ctx = self.ctx
        J = self.act(ctx.cocycle.j(self.group.inverse(g)), g)
        dJ = ctx.delta(J)
        lhs = self.D(N)[:, None] * self.rho(g, test, N)
        Z = (s - 1) * self.pi(dJ, test, N) + self.D(N)[:, None] * self.pi(J, test, N)
        R = self.rho(g, N, N)
        rhs = R @ Z
        scale = max(1.0, float(np.max(np.abs(lhs))))
        return float(np.max(np.abs(lhs - rhs)) / scale)


def circle_crossed(N: int = 128, K: int | None = None, beta: float = 0.3, **kw) -> CircleCrossed:
    K = 8 * N if K is None else K
    return CircleCrossed(CircleConfig(N=N, K=K, beta=beta, **kw))


def twisted_connection_check(sc: CircleCrossed, words=None, s=None, N=None, tol: float = 1e-8):
    """One record per group element; requires the covariant system to hold first."""
    words = [sc.group.identity, sc.phi(), sc.phi(-1)] if words is None else words
    rng = np.random.default_rng(0)
    f = sc.grid.random(rng, 3)
    cov = max(sc.covariance_residual(f, g, min(sc.cfg.N, 64)) for g in words if g)
    if cov > 1e-8:
        raise NotCovariant(f"covariance residual {cov:.3e}")
    recs = []
    for g in words:
        r = sc.twisted_connection_residual(g, s, N)
        recs.append(check(f"twisted connection {g}", "D rho(g) = rho(g)((s-1) pi(delta J) + D pi(J)), J = j(g^-1).g",
                          r, tol, backend="quadrature", s=str(sc.cfg.s if s is None else s)))
    return recs
