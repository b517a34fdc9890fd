"""Randomness, linear algebra, quadrature and root finding shared by the package.

Random streams
--------------
Every stochastic routine takes an :class:`RngStream`.  A stream is a value
``(seed, stream_id, path)`` that is turned into a fresh
``numpy.random.Generator`` backed by the counter-based Philox bit generator,
keyed through ``SeedSequence(seed, spawn_key=(stream_id, *path))``.  Gaussian
variates are drawn with numpy's ziggurat sampler (``standard_normal``).

Monte Carlo loops are split into fixed-size blocks; block ``i`` always uses
``stream.substream(i)``, so results do not depend on how many workers run the
blocks.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import BracketError, DomainError, ParameterError, ShapeError

__all__ = [
    "RngStream",
    "QuadratureRule",
    "sample_std_gaussian_vector",
    "symmetric_eigendecomposition",
    "singular_value_decomposition",
    "bisection_root",
    "adaptive_integral",
    "gauss_legendre_rule",
    "mp_edges",
    "mp_density",
    "mp_integral",
    "block_sizes",
    "run_blocks",
    "parallel_map",
]

_U64 = 2**64
ROOT_TOL = 1e-12
QUAD_TOL = 1e-10
LINALG_TOL = 1e-10


@dataclass(frozen=True)
class RngStream:
    """Reproducible source of random numbers.

    Parameters
    ----------
    seed : int
        64-bit unsigned master seed.
    stream_id : int
        64-bit unsigned substream selector.
    path : tuple of int
        Further nesting used by :meth:`substream`; empty for user streams.
    """

    seed: int = 0
    stream_id: int = 0
    path: tuple[int, ...] = ()

    def __post_init__(self):
        for name, val in (("seed", self.seed), ("stream_id", self.stream_id)):
            if not (0 <= int(val) < _U64):
                raise ParameterError(f"{name} must be a 64-bit unsigned integer, got {val}")
        if any(int(p) < 0 for p in self.path):
            raise ParameterError("substream indices must be nonnegative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id), *self.path))
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, i: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self.path + (int(i),))


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    interval: tuple[float, float]

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


def gauss_legendre_rule(n: int, a: float = 0.0, b: float = 1.0) -> QuadratureRule:
    """``n``-point Gauss-Legendre rule mapped to ``[a, b]``."""
    if n < 1:
        raise ParameterError("rule needs at least one node")
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return QuadratureRule(nodes=a + half * (x + 1.0), weights=half * w, interval=(a, b))


def sample_std_gaussian_vector(stream: RngStream, d: int) -> np.ndarray:
    """Draw ``d`` i.i.d. standard normal values from a fresh generator of ``stream``."""
    if int(d) != d or d < 1:
        raise ShapeError(f"dimension must be a positive integer, got {d}")
    return stream.generator().standard_normal(int(d))


def _as_square(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {M.shape}")
    return M


def symmetric_eigendecomposition(M) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and orthonormal eigenvectors (columns)."""
    M = _as_square(M)
    norm = np.linalg.norm(M)
    if np.linalg.norm(M - M.T) > LINALG_TOL * (1.0 + norm):
        raise ShapeError("matrix is not symmetric")
    w, Q = np.linalg.eigh(0.5 * (M + M.T))
    return w[::-1].copy(), Q[:, ::-1].copy()


def singular_value_decomposition(M) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD ``M = U diag(s) V^T`` with ``s`` descending; returns ``(U, s, V)``."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ShapeError(f"expected a matrix, got shape {M.shape}")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    return U, s, Vt.T


def bisection_root(f: Callable[[float], float], bracket: Sequence[float],
                   tol: float = ROOT_TOL, max_iter: int = 400) -> float:
    """Root of a continuous monotone function by bisection.

    Stops once the bracket width is at most ``tol * (1 + |root|)`` or when the
    midpoint no longer moves in floating point.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if math.copysign(1.0, flo) == math.copysign(1.0, fhi):
        raise BracketError(f"f({lo})={flo} and f({hi})={fhi} have the same sign")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if math.copysign(1.0, fm) == math.copysign(1.0, flo):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
        if hi - lo <= tol * (1.0 + abs(mid)):
            break
    # return the endpoint with the smaller residual
    return lo if abs(flo) <= abs(fhi) else hi


def adaptive_integral(f: Callable[[float], float], interval: Sequence[float],
                      tol: float = QUAD_TOL) -> float:
    """Globally adaptive Gauss-Kronrod quadrature (QUADPACK via scipy).

    Infinite endpoints are handled by QUADPACK's internal variable change.
    Raises :class:`DomainError` if ``f`` produces a non-finite value.
    """
    a, b = float(interval[0]), float(interval[1])

    def checked(u):
        val = f(u)
        if not math.isfinite(val):
            raise DomainError(f"integrand is not finite at u={u}")
        return val

    # QUADPACK's roundoff warnings are superseded by the explicit error check below
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(checked, a, b, epsabs=tol, epsrel=0.0, limit=500)
        if not err <= max(tol, 1e3 * np.finfo(float).eps * abs(val)):
            # one more attempt with a relative target before giving up
            val, err = integrate.quad(checked, a, b, epsabs=tol, epsrel=1e-13, limit=2000)
    if not err <= max(tol, 1e3 * np.finfo(float).eps * abs(val)):
        raise DomainError(f"quadrature error estimate {err:g} exceeds tolerance {tol:g}")
    return float(val)


# Marchenko-Pastur (singular value) density ----------------------------------

def mp_edges(y: float) -> tuple[float, float]:
    """Support ``[1 - sqrt(y), 1 + sqrt(y)]`` of the singular value density."""
    if not 0.0 < y <= 1.0:
        raise DomainError(f"aspect ratio y must lie in (0, 1], got {y}")
    r = math.sqrt(y)
    return 1.0 - r, 1.0 + r


def mp_density(u, y: float):
    """Density ``sqrt((u^2 - a_-^2)(a_+^2 - u^2)) / (pi y u)`` on ``[a_-, a_+]``."""
    am, ap = mp_edges(y)
    u = np.asarray(u, dtype=float)
    inside = (u > am) & (u < ap) & (u > 0)
    prod = np.where(inside, (u * u - am * am) * (ap * ap - u * u), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(inside, np.sqrt(prod) / (math.pi * y * u), 0.0)
    return out[()] if out.ndim == 0 else out


def mp_integral(h: Callable[[float], float], y: float, lower: float | None = None,
                tol: float = QUAD_TOL) -> float:
    """``int_{max(a_-, lower)}^{a_+} h(u) phi_y(u) du``.

    Uses ``u^2 = a_-^2 + (a_+^2 - a_-^2) sin^2(theta)``, under which the
    square-root edge behaviour of the density cancels and the integrand is
    smooth in ``theta``.
    """
    am, ap = mp_edges(y)
    span = ap * ap - am * am  # = 4 sqrt(y)
    theta_lo = 0.0
    if lower is not None and lower > am:
        if lower >= ap:
            return 0.0
        theta_lo = math.asin(math.sqrt((lower * lower - am * am) / span))
    coef = span * span / (math.pi * y)

    def integrand(theta):
        s2 = math.sin(theta) ** 2
        c2 = 1.0 - s2
        u2 = am * am + span * s2
        if u2 <= 0.0:
            # a_- = 0 and theta = 0: the limit of s2 / u2 is 1 / span
            return coef * c2 / span * h(0.0)
        return coef * s2 * c2 / u2 * h(math.sqrt(u2))

    return adaptive_integral(integrand, (theta_lo, 0.5 * math.pi), tol)


# Block-parallel Monte Carlo ---------------------------------------------------

DEFAULT_BLOCK = 4096


def block_sizes(n: int, block_size: int = DEFAULT_BLOCK) -> list[int]:
    if n < 0 or block_size < 1:
        raise ParameterError("need n >= 0 and block_size >= 1")
    full, rest = divmod(int(n), int(block_size))
    return [block_size] * full + ([rest] if rest else [])


def _call_block(args):
    func, stream, size, start = args
    return func(stream, size, start)


def run_blocks(func: Callable, n: int, stream: RngStream, workers: int = 1,
               block_size: int = DEFAULT_BLOCK) -> list:
    """Evaluate ``func(substream_i, size_i, start_i)`` for each fixed block.

    The block layout and substreams depend only on ``n`` and ``block_size``,
    so the returned list is identical for any ``workers``.  ``func`` must be
    picklable when ``workers > 1``.
    """
    sizes = block_sizes(n, block_size)
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int) if sizes else []
    tasks = [(func, stream.substream(i), s, int(st)) for i, (s, st) in enumerate(zip(sizes, starts))]
    if workers <= 1 or len(tasks) <= 1:
        return [_call_block(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=int(workers)) as ex:
        return list(ex.map(_call_block, tasks))


def parallel_map(func: Callable, items: Sequence, workers: int = 1, chunksize: int = 8) -> list:
    """``[func(x) for x in items]``, optionally spread over processes (order kept)."""
    if workers <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=int(workers)) as ex:
        return list(ex.map(func, items, chunksize=chunksize))
