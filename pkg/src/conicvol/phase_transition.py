"""Phase-transition curves for l1 and Schatten-1 recovery, and recovery experiments.

The l1 curve is

    psi(rho) = inf_{gamma >= 0} rho (1 + gamma^2) + (1 - rho) E (|N| - gamma)_+^2,

and ``d psi(s/d)`` approximates the statistical dimension of the l1 descent
cone at an ``s``-sparse point.  The Schatten-1 curve ``psi(rho, nu)``
replaces ``|N|`` by the singular-value law of a rectangular Gaussian block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

from .cones import L1Descent
from .errors import DomainError, InvariantError, ParameterError
from .intrinsic_volumes import IVDistribution, estimate_moments
from .normal_approx import berry_esseen_vc
from .numerics import RngStream, bisection_root, mp_edges, mp_integral, parallel_map
from .solver import SolverConfig, basis_pursuit, golden_section

__all__ = [
    "expected_truncated_square", "stationary_lhs_l1", "l1_objective", "gamma_l1", "psi_l1",
    "L1Curve", "psi_l1_direct", "delta_bounds_l1", "DeltaBounds", "var_lower_l1", "eta_schatten",
    "stationary_lhs_schatten", "psi_schatten", "SchattenCurve", "var_lower_schatten",
    "crofton_bounds", "CroftonBounds", "gaussian_prediction", "Prediction", "recovery_trial",
    "TrialOutcome", "phase_curve", "PhaseCurve", "PhaseRow", "PHASE_COLUMNS", "DEFAULT_T_GRID",
]

GAMMA_BRACKET = (1e-8, 40.0)
DEFAULT_T_GRID = tuple(np.round(np.arange(-3.0, 3.0001, 0.5), 10))
PHASE_COLUMNS = ("t", "m", "successes", "trials", "p_hat", "se", "phi_t", "error_budget",
                 "failed_to_solve")

_phi = stats.norm.pdf
_Q = stats.norm.sf


def _check_rho(rho: float) -> None:
    if not 0.0 < rho < 1.0:
        raise DomainError(f"rho must lie in (0, 1), got {rho}")


# l1 ------------------------------------------------------------------------------------

def expected_truncated_square(gamma: float) -> float:
    """``E (|N| - gamma)_+^2 = 2 [(1 + gamma^2) Q(gamma) - gamma phi(gamma)]``."""
    if gamma < 0:
        raise DomainError("gamma must be nonnegative")
    return float(2.0 * ((1.0 + gamma * gamma) * _Q(gamma) - gamma * _phi(gamma)))


def stationary_lhs_l1(gamma: float) -> float:
    """``2 (phi(gamma) / gamma - Q(gamma))``, strictly decreasing on ``(0, inf)``."""
    return float(2.0 * (_phi(gamma) / gamma - _Q(gamma)))


def l1_objective(gamma: float, rho: float) -> float:
    return rho * (1.0 + gamma * gamma) + (1.0 - rho) * expected_truncated_square(gamma)


def gamma_l1(rho: float) -> float:
    """Solution of ``2 (phi(gamma) / gamma - Q(gamma)) = rho / (1 - rho)``."""
    _check_rho(rho)
    target = rho / (1.0 - rho)
    return bisection_root(lambda g: stationary_lhs_l1(g) - target, GAMMA_BRACKET, tol=1e-15)


@dataclass(frozen=True)
class L1Curve:
    rho: float
    gamma_star: float
    psi: float
    residual: float


def psi_l1(rho: float) -> L1Curve:
    g = gamma_l1(rho)
    res = abs(stationary_lhs_l1(g) - rho / (1.0 - rho))
    return L1Curve(rho, g, l1_objective(g, rho), res)


def psi_l1_direct(rho: float, tol: float = 1e-10) -> tuple[float, float]:
    """``(argmin, min)`` of the psi objective by golden-section search (oracle)."""
    _check_rho(rho)
    return golden_section(lambda g: l1_objective(g, rho), 0.0, GAMMA_BRACKET[1], tol)


class DeltaBounds(NamedTuple):
    lower: float
    upper: float
    chre_upper: float


def delta_bounds_l1(d: int, s: int) -> DeltaBounds:
    """``d (psi(s/d) - 2/sqrt(sd)) <= delta <= d psi(s/d)``, and ``delta <= 2s log(d/s) + 5s/4``."""
    if not 1 <= s <= d:
        raise ParameterError("need 1 <= s <= d")
    chre = 2.0 * s * math.log(d / s) + 1.25 * s
    if s == d:
        # psi(1) = 1: the descent cone at a vector with full support is a half-space
        return DeltaBounds(d * (1.0 - 2.0 / d), float(d), chre)
    psi = psi_l1(s / d).psi
    return DeltaBounds(d * (psi - 2.0 / math.sqrt(s * d)), d * psi, chre)


def var_lower_l1(rho: float) -> float:
    """Asymptotic lower bound ``sqrt(2) min(2 / sqrt(psi), rho^2 gamma^4 / psi^(3/2))`` on ``tau^2 / delta``."""
    c = psi_l1(rho)
    return math.sqrt(2.0) * min(2.0 / math.sqrt(c.psi), rho**2 * c.gamma_star**4 / c.psi**1.5)


# Schatten-1 ----------------------------------------------------------------------------

def _check_nu(nu: float) -> None:
    if not 0.0 < nu <= 1.0:
        raise DomainError(f"nu must lie in (0, 1], got {nu}")


def _aspect(rho: float, nu: float) -> float:
    return nu * (1.0 - rho) / (1.0 - rho * nu)


def eta_schatten(gamma: float, rho: float, nu: float) -> float:
    _check_rho(rho)
    _check_nu(nu)
    if gamma < 0:
        raise DomainError("gamma must be nonnegative")
    y = _aspect(rho, nu)
    tail = mp_integral(lambda u: (u - gamma) ** 2, y, lower=gamma)
    return rho * nu + (1.0 - rho * nu) * (rho * (1.0 + gamma * gamma) + (1.0 - rho) * tail)


def stationary_lhs_schatten(gamma: float, y: float) -> float:
    """``int_{a_- v gamma}^{a_+} (u / gamma - 1) phi_y(u) du``."""
    return mp_integral(lambda u: u / gamma - 1.0, y, lower=gamma)


@dataclass(frozen=True)
class SchattenCurve:
    rho: float
    nu: float
    y: float
    a_minus: float
    a_plus: float
    gamma_star: float
    psi: float
    residual: float


def psi_schatten(rho: float, nu: float) -> SchattenCurve:
    """``psi(rho, nu) = inf_gamma eta(gamma)`` through the stationary equation."""
    _check_rho(rho)
    _check_nu(nu)
    y = _aspect(rho, nu)
    am, ap = mp_edges(y)
    target = rho / (1.0 - rho)
    g = bisection_root(lambda t: stationary_lhs_schatten(t, y) - target, (1e-8, ap), tol=1e-13)
    res = abs(stationary_lhs_schatten(g, y) - target)
    return SchattenCurve(rho, nu, y, am, ap, g, eta_schatten(g, rho, nu), res)


def var_lower_schatten(rho: float, nu: float, literal: bool = False) -> float:
    """Asymptotic lower bound on ``tau^2 / delta`` for Schatten-1 descent cones.

    ``min(sqrt(2) [rho (1 - nu rho) gamma^2]^2 / psi^(3/2), 2^(3/2) / sqrt(psi))``.
    The first term comes from ``v / (nm) >= rho (1 - nu rho) gamma^2``; pass
    ``literal=True`` to use ``gamma`` in place of ``gamma^2`` there instead.
    """
    c = psi_schatten(rho, nu)
    g = c.gamma_star if literal else c.gamma_star**2
    first = math.sqrt(2.0) * (rho * (1.0 - nu * rho) * g) ** 2 / c.psi**1.5
    return min(first, 2.0**1.5 / math.sqrt(c.psi))


# Crofton / interlacing -----------------------------------------------------------------

class CroftonBounds(NamedTuple):
    exact: float
    lower: float
    upper: float
    rational: tuple[Fraction, Fraction, Fraction] | None = None


def crofton_bounds(ivd: IVDistribution, m: int) -> CroftonBounds:
    """Probability that a uniformly random subspace of codimension ``m`` misses the cone.

    ``exact = 1 - 2 h_{m+1}`` with ``h_k = sum_{j >= k, j - k even} v_j``, and
    the sandwich ``P(V <= m - 1) <= exact <= P(V <= m)``.  A point mass
    (a subspace of dimension ``k``) gives ``exact = 1{k <= m}``.  With rational
    weights everything is computed exactly and the sandwich is checked
    without tolerance.
    """
    d = ivd.d
    if not 0 <= m <= d:
        raise ParameterError(f"m must lie in [0, {d}], got {m}")
    w = ivd.exact if ivd.exact is not None else [float(x) for x in ivd.probs]
    zero = Fraction(0) if ivd.exact is not None else 0.0
    atoms = [j for j, x in enumerate(w) if x != 0]
    if len(atoms) == 1:
        exact = zero + (1 if atoms[0] <= m else 0)
    else:
        exact = 1 - 2 * sum(w[m + 1::2], zero)
    lower = sum(w[:m], zero)
    upper = sum(w[: m + 1], zero)
    tol = 0 if ivd.exact is not None else 1e-12
    if not (lower - tol <= exact <= upper + tol):
        raise InvariantError(f"interlacing fails at m={m}: {lower} <= {exact} <= {upper}")
    rational = (exact, lower, upper) if ivd.exact is not None else None
    return CroftonBounds(float(exact), float(lower), float(upper), rational)


# Gaussian prediction and recovery experiments -------------------------------------------

class Prediction(NamedTuple):
    phi_t: float
    error_budget: float
    valid: bool


def gaussian_prediction(delta: float, tau_sq: float, t: float) -> Prediction:
    """``Phi(t)`` and the uniform error bound on the recovery probability at ``m_t``.

    The budget is ``h(delta) + 48 / sqrt(alpha log+(alpha sqrt(2) delta)) +
    1 / sqrt(2 pi tau^2)``; for ``delta < 8`` it is reported as ``inf`` with
    ``valid=False``.
    """
    be = berry_esseen_vc(delta, tau_sq).simplified
    phi_t = float(stats.norm.cdf(t))
    if not be.valid:
        return Prediction(phi_t, math.inf, False)
    return Prediction(phi_t, be.value + 1.0 / math.sqrt(2.0 * math.pi * tau_sq), True)


class TrialOutcome(NamedTuple):
    success: bool
    solved: bool


def recovery_trial(d: int, s: int, m: int, stream: RngStream,
                   config: SolverConfig | None = None) -> TrialOutcome:
    """One basis-pursuit recovery attempt of ``x0 = (1,...,1, 0,...,0)`` from ``m`` measurements."""
    if not (1 <= m <= d and 1 <= s <= d):
        raise ParameterError("need 1 <= m <= d and 1 <= s <= d")
    A = stream.generator().standard_normal((m, d))
    x0 = np.zeros(d)
    x0[:s] = 1.0
    rep = basis_pursuit(A, A @ x0, config)
    if not rep.converged:
        return TrialOutcome(False, False)
    l1 = float(s)
    ok = (np.linalg.norm(rep.x_hat - x0) <= 1e-5 * (1.0 + math.sqrt(s))
          and abs(rep.objective - l1) <= 1e-6 * l1)
    return TrialOutcome(bool(ok), True)


@dataclass(frozen=True)
class PhaseRow:
    t: float
    m: int
    successes: int
    trials: int
    p_hat: float
    se: float
    phi_t: float
    error_budget: float
    failed_to_solve: int

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, c) for c in PHASE_COLUMNS)


@dataclass(frozen=True)
class PhaseCurve:
    d: int
    s: int
    delta: float
    tau_sq: float
    rows: tuple[PhaseRow, ...]


def _trial_task(args):
    d, s, m, stream, config = args
    return recovery_trial(d, s, m, stream, config)


def phase_curve(d: int, s: int, t_grid: Sequence[float] = DEFAULT_T_GRID, trials: int = 200,
                stream: RngStream | None = None, workers: int = 1, delta: float | None = None,
                tau_sq: float | None = None, n_moments: int = 20000,
                config: SolverConfig | None = None) -> PhaseCurve:
    """Empirical recovery probability at ``m_t = clamp(floor(delta + t tau), 1, d)``.

    ``delta`` and ``tau_sq`` default to Monte Carlo estimates for the l1
    descent cone drawn from ``stream.substream(0)``.  Trial ``i`` at grid
    point ``k`` uses ``stream.substream(1).substream(k).substream(i)``.
    """
    stream = stream or RngStream(0)
    if trials < 1:
        raise ParameterError("trials must be positive")
    if delta is None or tau_sq is None:
        est = estimate_moments(L1Descent(d, s), n_moments, stream.substream(0), workers)
        delta = est.delta_hat if delta is None else delta
        tau_sq = est.tau_sq_hat if tau_sq is None else tau_sq
    if tau_sq <= 0:
        raise DomainError(f"tau_sq must be positive, got {tau_sq}")
    tau = math.sqrt(tau_sq)
    ts = [float(t) for t in t_grid]
    ms = [min(max(math.floor(delta + t * tau), 1), d) for t in ts]
    base = stream.substream(1)
    tasks = [(d, s, m, base.substream(k).substream(i), config)
             for k, m in enumerate(ms) for i in range(trials)]
    outcomes = parallel_map(_trial_task, tasks, workers)
    rows = []
    for k, (t, m) in enumerate(zip(ts, ms)):
        chunk = outcomes[k * trials:(k + 1) * trials]
        solved = sum(o.solved for o in chunk)
        succ = sum(o.success for o in chunk)
        p = succ / solved if solved else math.nan
        se = math.sqrt(p * (1.0 - p) / solved) if solved else math.nan
        pred = gaussian_prediction(delta, tau_sq, t)
        rows.append(PhaseRow(t, m, succ, trials, p, se, pred.phi_t, pred.error_budget,
                             trials - solved))
    return PhaseCurve(d, s, float(delta), float(tau_sq), tuple(rows))
