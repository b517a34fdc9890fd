"""Basis pursuit, a guarded 1-D convex minimizer, and a tiny exact LP oracle."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CapabilityError, DivergenceError, ParameterError, ShapeError

__all__ = [
    "SolverConfig", "SolveReport", "basis_pursuit", "minimize_1d_convex",
    "hp_certificate", "LPResult", "lp_oracle_small", "golden_section",
]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


# 1-D convex minimization ------------------------------------------------------

def hp_certificate(f: Callable[[float], float], y0: float, eps: float,
                   g: Callable[[float], float] | None = None) -> bool:
    """Three-point test locating the minimizer of a convex ``f``.

    With ``g`` any approximation of ``f`` (``g = f`` by default), returns True
    when ``2 max_{v in {0, +-1}} |g - f|(y0 + eps v) < min_{u = +-1} g(y0 + eps u) - g(y0)``,
    which guarantees that every minimizer of ``f`` lies within ``eps`` of ``y0``.
    """
    if not 0.0 < eps < y0:
        raise ParameterError("need 0 < eps < y0")
    g = f if g is None else g
    pts = (y0 - eps, y0, y0 + eps)
    gv = [g(p) for p in pts]
    dev = 0.0 if g is f else max(abs(g(p) - f(p)) for p in pts)
    return 2.0 * dev < min(gv[0], gv[2]) - gv[1]


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float,
                   max_iter: int = 500) -> tuple[float, float]:
    """Golden-section search on ``[a, b]`` for a unimodal ``f``."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    fx = f(x)
    # the endpoints may beat the midpoint when the minimum sits on the boundary
    for cand in (a, b, c, d):
        fv = f(cand)
        if fv < fx:
            x, fx = cand, fv
    return x, fx


def minimize_1d_convex(f: Callable[[float], float], lo: float = 0.0, tol: float = 1e-10,
                       step: float = 1.0, max_extent: float = 1e6) -> tuple[float, float]:
    """Minimize a coercive convex function on ``[lo, inf)``.

    Brackets the minimizer by doubling the step until an interior point beats
    both ends, then shrinks the bracket by golden-section search to width
    ``tol``.  Raises :class:`DivergenceError` if the bracket would extend past
    ``lo + max_extent * max(1, |lo|)``.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    limit = lo + max_extent * max(1.0, abs(lo))
    f0 = f(lo)
    h = step
    f1 = f(lo + h)
    if f1 >= f0:
        a, b = lo, lo + h
    else:
        prev, cur, fcur = lo, lo + h, f1
        while True:
            h *= 2.0
            nxt = lo + h
            if nxt > limit:
                raise DivergenceError("function does not appear coercive on [lo, inf)")
            fn = f(nxt)
            if fn >= fcur:
                a, b = prev, nxt
                break
            prev, cur, fcur = cur, nxt, fn
    return golden_section(f, a, b, tol)


# Basis pursuit ------------------------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 5000
    primal_tol: float = 1e-8
    dual_tol: float = 1e-8
    penalty: float = 1.0
    check_every: int = 10

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ParameterError("max_iterations must be at least 1")
        if self.primal_tol <= 0 or self.dual_tol <= 0 or self.penalty <= 0:
            raise ParameterError("tolerances and penalty must be positive")


@dataclass
class SolveReport:
    x_hat: np.ndarray
    iterations: int
    primal_residual: float
    dual_residual: float
    converged: bool
    certified: bool = False

    @property
    def objective(self) -> float:
        return float(np.abs(self.x_hat).sum())


def _soft(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _polish(A, z, y, v, u_scaled, zero_tol, crossover=False):
    """Try to turn an ADMM iterate into an exactly feasible, certified optimum.

    Candidate supports are where ``|y|`` is non-negligible and, failing that,
    the ``m`` largest entries of the pre-threshold iterate ``|v|`` (an optimal
    vertex may carry entries too small to survive soft thresholding yet) and
    the ``m`` columns with largest ``|A_j^T lam|`` for the current dual
    estimate, which settles before the primal iterate does.
    The certificate is a dual vector ``lam`` with ``A_S^T lam = sign(x_S)``
    and ``|A_j^T lam| <= 1`` off the support, which is exactly first-order
    optimality for the LP.
    """
    m, d = A.shape
    scale = max(1.0, float(np.abs(y).max(initial=0.0)))
    S = np.flatnonzero(np.abs(y) > zero_tol * scale)
    x = _polish_on(A, z, u_scaled, S) if 0 < S.size <= m else None
    if x is None and S.size != m:
        top = np.sort(np.argsort(-np.abs(v), kind="stable")[:m])
        x = _polish_on(A, z, u_scaled, top)
    if x is None:
        lam, *_ = np.linalg.lstsq(A.T, u_scaled, rcond=None)
        top = np.sort(np.argsort(-np.abs(A.T @ lam), kind="stable")[:m])
        x = _polish_on(A, z, u_scaled, top)
        if x is None and crossover:
            x = _crossover(A, z, top)
    return x


def _polish_on(A, z, u_scaled, S):
    m, d = A.shape
    AS = A[:, S]
    xs, *_ = np.linalg.lstsq(AS, z, rcond=None)
    if np.linalg.norm(AS @ xs - z) > 1e-12 * (1.0 + np.linalg.norm(z)):
        return None
    sgn = np.sign(xs)
    lam0, *_ = np.linalg.lstsq(A.T, u_scaled, rcond=None)
    corr, *_ = np.linalg.lstsq(AS.T, sgn - AS.T @ lam0, rcond=None)
    lam = lam0 + corr
    w = A.T @ lam
    if np.abs(w[S] - sgn).max() > 1e-9:
        return None
    off = np.ones(d, bool)
    off[S] = False
    if off.any() and np.abs(w[off]).max() > 1.0 + 1e-10:
        return None
    x = np.zeros(d)
    x[S] = xs
    return x


def _crossover(A, z, basis, max_pivots=None):
    """Primal simplex for ``min ||x||_1, A x = z`` started from a column basis.

    Works on the split form ``x = p - n``: each basic column carries the sign
    ``sigma_i`` of whichever of ``p_i, n_i`` is basic, so the simplex
    multipliers solve ``A_B^T lam = sigma``.  A nonbasic column enters when
    ``|A_j^T lam| > 1``.  Bland's rule is used from the first degenerate
    pivot on, which rules out cycling.  Returns None when the basis is
    singular or the pivot budget runs out.
    """
    m, d = A.shape
    B = [int(j) for j in basis]
    max_pivots = 20 * d if max_pivots is None else max_pivots
    try:
        xB = np.linalg.solve(A[:, B], z)
    except np.linalg.LinAlgError:
        return None
    sigma = np.where(xB < 0, -1.0, 1.0)
    bland = False
    for _ in range(max_pivots):
        AB = A[:, B]
        try:
            xB = np.linalg.solve(AB, z)
            lam = np.linalg.solve(AB.T, sigma)
        except np.linalg.LinAlgError:
            return None
        val = np.maximum(sigma * xB, 0.0)  # values of the basic split variables
        w = A.T @ lam
        inb = np.zeros(d, bool)
        inb[B] = True
        cand = np.flatnonzero(~inb & (np.abs(w) > 1.0 + 1e-10))
        if cand.size == 0:
            x = np.zeros(d)
            x[B] = sigma * val
            return x
        j = int(cand[0]) if bland else int(cand[np.argmax(np.abs(w[cand]))])
        s = 1.0 if w[j] > 0 else -1.0
        # increasing the entering variable moves x_B by -theta * dirn
        dirn = np.linalg.solve(AB, A[:, j]) * s
        rate = sigma * dirn
        block = np.flatnonzero(rate > 1e-13)
        if block.size == 0:
            return None  # unbounded ray; impossible for a feasible l1 problem
        theta = val[block] / rate[block]
        tmin = float(theta.min())
        ties = block[theta <= tmin + 1e-13 * (1.0 + tmin)]
        leave = int(min(ties, key=lambda i: B[i])) if bland else int(ties[0])
        bland = tmin <= 1e-13 * (1.0 + val.max())
        B[leave] = j
        sigma[leave] = s
    return None


def basis_pursuit(A, z, config: SolverConfig | None = None) -> SolveReport:
    """Solve ``min ||x||_1`` subject to ``A x = z`` by ADMM.

    Splitting ``x = y`` with ``x`` on the affine set and ``y`` carrying the l1
    term: the x-step is an affine projection through a cached factorization
    of ``A A^T``, the y-step is soft thresholding.  The penalty is rebalanced
    by factors of 2 from the primal/dual residual ratio.  Every
    ``check_every`` iterations the iterate is polished on its support and
    accepted once a dual optimality certificate is found.
    """
    cfg = config or SolverConfig()
    A = np.asarray(A, dtype=float)
    z = np.asarray(z, dtype=float).ravel()
    if A.ndim != 2 or A.shape[0] != z.size:
        raise ShapeError(f"A has shape {A.shape} but z has length {z.size}")
    m, d = A.shape
    if m > d:
        raise ParameterError("basis pursuit expects m <= d")
    # affine projection v -> v - A^T (A A^T)^{-1} (A v - z)
    L = np.linalg.cholesky(A @ A.T)
    Pt = np.linalg.solve(L.T, np.linalg.solve(L, A)).T  # = A^T (A A^T)^{-1}
    x0 = Pt @ z
    if m == d:
        x = x0
        return SolveReport(x, 0, float(np.linalg.norm(A @ x - z)), 0.0, True, True)

    rho = cfg.penalty
    y = x0.copy()
    u = np.zeros(d)
    znorm = np.linalg.norm(z)
    r_norm = s_norm = math.inf
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        v = y - u
        x = v - Pt @ (A @ v - z)
        y_old = y
        y = _soft(x + u, 1.0 / rho)
        u = u + x - y
        if it % cfg.check_every:
            continue
        r_norm = float(np.linalg.norm(x - y))
        s_norm = float(rho * np.linalg.norm(y - y_old))
        polished = _polish(A, z, y, x + u, rho * u, zero_tol=1e-7,
                           crossover=it % (20 * cfg.check_every) == 0)
        if polished is not None:
            return SolveReport(polished, it, float(np.linalg.norm(A @ polished - z)),
                               s_norm, True, True)
        eps_pri = cfg.primal_tol * (1.0 + max(np.linalg.norm(x), np.linalg.norm(y)))
        eps_dual = cfg.dual_tol * (1.0 + rho * np.linalg.norm(u))
        if r_norm <= eps_pri and s_norm <= eps_dual:
            xf = x  # exactly feasible up to rounding
            return SolveReport(xf, it, float(np.linalg.norm(A @ xf - z)), s_norm,
                               bool(np.linalg.norm(A @ xf - z) <= cfg.primal_tol * (1 + znorm)))
        if r_norm > 10.0 * s_norm:
            rho *= 2.0
            u = u / 2.0
        elif s_norm > 10.0 * r_norm:
            rho /= 2.0
            u = u * 2.0
    xf = x
    pres = float(np.linalg.norm(A @ xf - z))
    return SolveReport(xf, it, pres, s_norm, False)


# Exact oracle for tiny instances ----------------------------------------------

@dataclass(frozen=True)
class LPResult:
    value: float
    x: np.ndarray | None
    feasible: bool


def lp_oracle_small(A, z) -> LPResult:
    """Exact ``min ||x||_1 s.t. A x = z`` by enumerating basic solutions.

    An optimal vertex of the equivalent LP is supported on ``rank(A)``
    linearly independent columns, so every such column subset is solved
    and the smallest l1 norm among consistent solutions is returned.
    """
    A = np.asarray(A, dtype=float)
    z = np.asarray(z, dtype=float).ravel()
    m, d = A.shape
    if d > 10:
        raise CapabilityError("lp_oracle_small handles d <= 10 only")
    rank = int(np.linalg.matrix_rank(A))
    tol = 1e-9 * (1.0 + np.linalg.norm(z))
    if rank == 0:
        ok = np.linalg.norm(z) <= tol
        return LPResult(0.0 if ok else math.inf, np.zeros(d) if ok else None, bool(ok))
    best, best_x = math.inf, None
    for S in itertools.combinations(range(d), rank):
        AS = A[:, S]
        if np.linalg.matrix_rank(AS) < rank:
            continue
        xs, *_ = np.linalg.lstsq(AS, z, rcond=None)
        if np.linalg.norm(AS @ xs - z) > tol:
            continue
        val = float(np.abs(xs).sum())
        if val < best:
            best = val
            best_x = np.zeros(d)
            best_x[list(S)] = xs
    return LPResult(best, best_x, best_x is not None)
