"""Normal-approximation and concentration bounds, and Monte Carlo diagnostics.

Throughout, ``log+(x) = max(log x, 0)`` with the natural logarithm and
``a v b = max(a, b)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import stats

from .cones import Cone
from .errors import DegenerateError, DomainError, InvariantError, ParameterError
from .intrinsic_volumes import IVDistribution
from .numerics import DEFAULT_BLOCK, RngStream, run_blocks

__all__ = [
    "BoundReport", "BerryEsseen", "EmpiricalCDF", "log_plus", "h_small", "berry_esseen_vc",
    "L_and_B", "smoothing_bound", "tv_bound_projection", "tv_bound_shifted", "tv_bound_distance",
    "concentration_laplace", "concentration_tail", "concentration_tail_companion",
    "kolmogorov_distance", "sample_W", "sample_WV", "joint_correlation", "xi",
    "char_identity_check", "CharCheck", "rate_constant_limit", "rate_constant_check", "RateCheck",
]


def log_plus(x: float) -> float:
    return math.log(x) if x > 1.0 else 0.0


@dataclass(frozen=True)
class BoundReport:
    """Value of a named bound together with its inputs.

    ``valid`` records whether the preconditions of the bound hold; a bound
    at or above one says nothing about a probability distance and is
    marked ``vacuous`` (the number is still reported).
    """

    name: str
    inputs: dict
    value: float
    valid: bool = True
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.value >= 0:
            raise InvariantError(f"bound {self.name} evaluated to {self.value}")

    @property
    def vacuous(self) -> bool:
        return self.value >= 1.0

    def row(self) -> dict:
        out = {"name": self.name, **self.inputs, "value": self.value, "valid": self.valid}
        out.update(self.extra)
        return out


# Berry-Esseen bounds for V --------------------------------------------------------------

def h_small(delta: float) -> float:
    """``(1/72) (log(delta) / delta^(3/16))^(5/2)``."""
    if not delta > 1.0:
        raise DomainError(f"h_small needs delta > 1, got {delta}")
    return (math.log(delta) / delta ** (3.0 / 16.0)) ** 2.5 / 72.0


class BerryEsseen(NamedTuple):
    simplified: BoundReport
    full: BoundReport


def _simplified(delta: float, tau_sq: float) -> BoundReport:
    inputs = {"delta": delta, "tau_sq": tau_sq}
    if delta < 8:
        # the h-form is only derived for delta >= 8
        return BoundReport("berry_esseen_simplified", inputs, math.inf, valid=False)
    alpha = tau_sq / delta
    lp = log_plus(alpha * math.sqrt(2.0) * delta)
    value = math.inf if lp == 0.0 else h_small(delta) + 48.0 / math.sqrt(alpha * lp)
    return BoundReport("berry_esseen_simplified", inputs, value, extra={"alpha": alpha})


def _full(delta: float, tau_sq: float) -> BoundReport:
    tau = math.sqrt(tau_sq)
    inputs = {"delta": delta, "tau_sq": tau_sq}
    l1 = log_plus(tau**3 / delta)
    if l1 == 0.0:
        return BoundReport("berry_esseen_full", inputs, math.inf)
    front = max(tau / delta**3, delta ** (-8.0 / 3.0)) ** (3.0 / 16.0)
    first = front * l1**1.5 * log_plus(tau_sq / (144.0 * delta) * l1) / 108.0
    second = 48.0 * math.sqrt(delta / (tau_sq * l1))
    return BoundReport("berry_esseen_full", inputs, first + second)


def berry_esseen_vc(delta: float, tau_sq: float) -> BerryEsseen:
    """Kolmogorov-distance bounds for ``(V - delta) / tau`` against N(0, 1).

    ``simplified`` is ``h(delta) + 48 / sqrt(alpha log+(alpha sqrt(2) delta))``
    with ``alpha = tau^2 / delta``, valid for ``delta >= 8``; ``full`` is the
    general bound that the simplified one is derived from.  Either is
    ``+inf`` when its logarithmic factor vanishes.
    """
    if not tau_sq > 0:
        raise DegenerateError("Berry-Esseen bounds need tau_sq > 0")
    if not delta > 0:
        raise DomainError("delta must be positive")
    return BerryEsseen(_simplified(delta, tau_sq), _full(delta, tau_sq))


def L_and_B(delta: float, tau_sq: float) -> tuple[float, float]:
    """Smoothing window ``L`` and characteristic-function gap ``B``.

    ``L = sqrt(tau^2 / (144 delta) log+(tau^3 / delta))`` and
    ``B = 32 L^3 exp(9 L^2 delta / tau^2) delta / tau^3``.
    """
    if delta <= 0 or tau_sq < 0:
        raise DomainError("need delta > 0 and tau_sq >= 0")
    if tau_sq > 2.0 * delta:
        raise InvariantError(f"tau_sq={tau_sq} exceeds 2 delta={2 * delta}")
    tau = math.sqrt(tau_sq)
    L = math.sqrt(tau_sq / (144.0 * delta) * log_plus(tau**3 / delta)) if tau > 0 else 0.0
    if L == 0.0:
        return 0.0, 0.0
    B = 32.0 * L**3 * math.exp(9.0 * L * L * delta / tau_sq) * delta / tau**3
    if L > tau / 8.0 * (1.0 + 1e-12):
        raise InvariantError(f"L={L} exceeds tau/8={tau / 8}")
    return L, B


def smoothing_bound(L: float, B: float) -> float:
    """``B log+(L) + 4 / L``: sup-distance bound from a characteristic-function gap."""
    if L <= 0:
        return math.inf
    return B * log_plus(L) + 4.0 / L


# Total variation bounds for squared projections ----------------------------------------

def tv_bound_projection(delta: float, sigma_sq: float, d: int | None = None) -> BoundReport:
    """``min(16 sqrt(delta) / sigma^2, 8 / sqrt(delta))`` for ``G - delta``.

    With ``d`` given, ``extra["self_dual"]`` holds ``8 sqrt(2) / sqrt(d)``,
    the bound for self-dual cones.
    """
    if not (delta > 0 and sigma_sq > 0):
        raise DomainError("delta and sigma_sq must be positive")
    value = min(16.0 * math.sqrt(delta) / sigma_sq, 8.0 / math.sqrt(delta))
    extra = {}
    if d is not None:
        if d < 1:
            raise DomainError("ambient dimension must be positive")
        extra["self_dual"] = 8.0 * math.sqrt(2.0) / math.sqrt(d)
    return BoundReport("tv_projection", {"delta": delta, "sigma_sq": sigma_sq}, value, extra=extra)


def tv_bound_shifted(m: float, mu_norm: float, sigma_sq: float) -> BoundReport:
    """``(16 / sigma^2) (sqrt(m)(1 + 2|mu|) + 3|mu|^2 + |mu|)``."""
    if not sigma_sq > 0:
        raise DomainError("sigma_sq must be positive")
    if m < 0 or mu_norm < 0:
        raise DomainError("m and mu_norm must be nonnegative")
    value = 16.0 / sigma_sq * (math.sqrt(m) * (1.0 + 2.0 * mu_norm) + 3.0 * mu_norm**2 + mu_norm)
    return BoundReport("tv_shifted", {"m": m, "mu_norm": mu_norm, "sigma_sq": sigma_sq}, value)


def tv_bound_distance(e_dist_sq: float, sigma_sq: float) -> BoundReport:
    """``16 sqrt(E d^2(g, C)) / sigma^2``."""
    if not sigma_sq > 0:
        raise DomainError("sigma_sq must be positive")
    if e_dist_sq < 0:
        raise DomainError("expected squared distance must be nonnegative")
    return BoundReport("tv_distance", {"e_dist_sq": e_dist_sq, "sigma_sq": sigma_sq},
                       16.0 * math.sqrt(e_dist_sq) / sigma_sq)


# Concentration -------------------------------------------------------------------------

def concentration_laplace(e_dist_sq: float, xi: float) -> float:
    """Bound ``exp(2 xi^2 E / (1 - 2 xi))`` on ``E exp(xi F)``, for ``xi < 1/2``."""
    if not xi < 0.5:
        raise DomainError(f"xi must be below 1/2, got {xi}")
    if e_dist_sq < 0:
        raise DomainError("expected squared distance must be nonnegative")
    return math.exp(2.0 * xi * xi * e_dist_sq / (1.0 - 2.0 * xi))


def _h_tail(u: float) -> float:
    # 1 + u - sqrt(1 + 2u), written to avoid cancellation for small u
    return u * u / (1.0 + u + math.sqrt(1.0 + 2.0 * u))


def concentration_tail(e_dist_sq: float, t: float) -> float:
    """Upper-tail bound ``P(F > t) <= exp(-E h(t / (2E)))``, ``h(u) = 1 + u - sqrt(1 + 2u)``."""
    if not (t > 0 and e_dist_sq > 0):
        raise DomainError("need t > 0 and E > 0")
    return math.exp(-e_dist_sq * _h_tail(t / (2.0 * e_dist_sq)))


def concentration_tail_companion(e_dist_sq: float, t: float) -> tuple[float, float]:
    """Equivalent form: ``P(F > sqrt(8 E t) + 2 t) <= exp(-t)``; returns ``(threshold, prob)``."""
    if not (t > 0 and e_dist_sq > 0):
        raise DomainError("need t > 0 and E > 0")
    return math.sqrt(8.0 * e_dist_sq * t) + 2.0 * t, math.exp(-t)


# Empirical distribution diagnostics -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class EmpiricalCDF:
    values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        if v.size == 0:
            raise ParameterError("empirical CDF needs at least one sample")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    def __call__(self, x):
        return np.searchsorted(self.values, x, side="right") / self.n


def kolmogorov_distance(sample, cdf: Callable = stats.norm.cdf) -> float:
    """``sup_x |F_n(x) - F(x)|`` (standard normal reference by default).

    Both one-sided gaps at each jump are checked, so the value is exact.
    """
    ecdf = sample if isinstance(sample, EmpiricalCDF) else EmpiricalCDF(sample)
    x = ecdf.values
    n = ecdf.n
    F = cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def _w_block(ivd: IVDistribution, stream: RngStream, size: int, start: int):
    rng = stream.generator()
    V = ivd.sample(rng, size)
    # a chi-square with V degrees of freedom is a sum of V squared normals
    X = np.where(V > 0, 2.0 * rng.standard_gamma(np.maximum(V, 1) / 2.0), 0.0)
    return np.stack([X - V, V], axis=1)


def sample_WV(ivd: IVDistribution, n: int, stream: RngStream, workers: int = 1,
              block_size: int = DEFAULT_BLOCK) -> tuple[np.ndarray, np.ndarray]:
    """Draws of ``(W / sqrt(2 delta), V)`` with ``W = sum_{i <= V} (X_i - 1)``."""
    if n < 1:
        raise ParameterError("need n >= 1")
    delta = ivd.delta
    if delta <= 0:
        raise DegenerateError("W is identically zero when delta = 0")
    out = np.concatenate(run_blocks(partial(_w_block, ivd), n, stream, workers, block_size))
    return out[:, 0] / math.sqrt(2.0 * delta), out[:, 1]


def sample_W(ivd: IVDistribution, n: int, stream: RngStream, workers: int = 1,
             block_size: int = DEFAULT_BLOCK) -> np.ndarray:
    """Standardized draws ``W / sqrt(2 delta)``; mean 0 and variance 1."""
    return sample_WV(ivd, n, stream, workers, block_size)[0]


def joint_correlation(ivd: IVDistribution, n: int, stream: RngStream, workers: int = 1) -> float:
    """Empirical correlation of ``W / sqrt(2 delta)`` and ``(V - delta) / tau``."""
    W, V = sample_WV(ivd, n, stream, workers)
    if np.all(V == V[0]):
        return 0.0
    return float(np.corrcoef(W, V)[0, 1])


def xi(t: complex) -> complex:
    """``(1 - exp(-2t)) / 2``."""
    return 0.5 * (1.0 - cmath.exp(-2.0 * t))


class CharCheck(NamedTuple):
    t: np.ndarray
    lhs: np.ndarray  # empirical E exp(i t V)
    rhs: np.ndarray  # empirical E exp(xi(i t) G)
    discrepancy: np.ndarray
    se: np.ndarray
    max_discrepancy: float


def _char_block(cone: Cone, ts: np.ndarray, stream: RngStream, size: int, start: int):
    g = stream.generator().standard_normal((size, cone.dim))
    V = cone.face_dims(g)
    P = cone.project_rows(g)
    G = np.einsum("ij,ij->i", P, P)
    z = np.array([xi(1j * t) for t in ts])
    eV = np.exp(1j * np.outer(V, ts))
    return eV.sum(axis=0), eV - np.exp(np.outer(G, z))


def char_identity_check(cone: Cone, t_grid: Sequence[float], n: int, stream: RngStream,
                        workers: int = 1) -> CharCheck:
    """Compare ``E exp(itV)`` with ``E exp(xi(it) G)`` on paired Gaussian draws.

    ``Re xi(it) = sin^2 t``; ``exp(xi G)`` has finite variance only when
    ``sin^2 t < 1/4``, so other ``t`` are rejected with a domain error
    (for ``sin^2 t >= 1/2`` the expectation itself diverges).
    """
    ts = np.asarray(t_grid, dtype=float).ravel()
    if ts.size == 0:
        raise ParameterError("t_grid is empty")
    bad = ts[np.sin(ts) ** 2 >= 0.25]
    if bad.size:
        raise DomainError(f"Monte Carlo variance of exp(xi G) is infinite at t={bad.tolist()}; "
                          "need sin^2 t < 1/4")
    if n < 2:
        raise ParameterError("need n >= 2")
    blocks = run_blocks(partial(_char_block, cone, ts), n, stream, workers)
    lhs = sum(b[0] for b in blocks) / n
    diffs = np.concatenate([b[1] for b in blocks])
    dmean = diffs.mean(axis=0)
    se = np.sqrt(np.mean(np.abs(diffs - dmean) ** 2, axis=0) / (n - 1))
    rhs = lhs - dmean
    disc = np.abs(dmean)
    return CharCheck(ts, lhs, rhs, disc, se, float(disc.max()))


def rate_constant_limit(x: float, r: float) -> float:
    """``-sqrt(2 / (18 + 9 r)) (x^2 - 1) phi(x)``."""
    if r < 0:
        raise DomainError("r must be nonnegative")
    return -math.sqrt(2.0 / (18.0 + 9.0 * r)) * (x * x - 1.0) * stats.norm.pdf(x)


class RateCheck(NamedTuple):
    lhs: float
    se: float
    rhs: float
    r: float


def rate_constant_check(ivd: IVDistribution, x: float, n: int, stream: RngStream,
                        workers: int = 1) -> RateCheck:
    """Scaled CDF gap ``(delta / sigma)(P[W / sqrt(2 delta) <= x] - Phi(x))`` vs its limit."""
    delta = ivd.delta
    if delta < 50:
        raise DomainError(f"rate diagnostic needs delta >= 50, got {delta}")
    sigma = math.sqrt(ivd.sigma_sq)
    r = ivd.tau_sq / delta
    W = sample_W(ivd, n, stream, workers)
    p = float(np.mean(W <= x))
    scale = delta / sigma
    lhs = scale * (p - float(stats.norm.cdf(x)))
    se = scale * math.sqrt(max(p * (1 - p), 1.0 / n) / n)
    return RateCheck(lhs, se, rate_constant_limit(x, r), r)
