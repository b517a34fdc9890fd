"""Intrinsic-volume distributions: exact laws, closed-form moments, Monte Carlo.

For a closed convex cone ``C`` in ``R^d`` the intrinsic volumes
``v_0, ..., v_d`` form the law of an integer variable ``V``.  Its mean is the
statistical dimension ``delta = E ||Pi_C(g)||^2``, its variance ``tau^2``,
and ``sigma^2 = Var ||Pi_C(g)||^2 = tau^2 + 2 delta``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import partial
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

from .cones import ChamberA, ChamberBC, Circular, Cone, Negated, Orthant, PolarOf, PSD, Subspace
from .errors import CapabilityError, DegenerateError, InvariantError, ParameterError
from .numerics import DEFAULT_BLOCK, RngStream, run_blocks

__all__ = [
    "IVDistribution", "MomentEstimates", "VarianceBounds", "ClosedFormMoments", "Estimate",
    "MSFCheck", "exact_distribution", "closed_form_moments", "estimate_moments",
    "sample_face_dims", "sample_V", "sample_squared_projections", "variance_bounds",
    "steiner_covariance", "steiner_covariance_exact", "master_steiner_moment_check",
    "master_steiner_rhs", "width_sandwich_check", "chi_mean", "mean_var_se", "circular_delta",
]

EXACT_RATIONAL_MAX_D = 30


class Estimate(NamedTuple):
    value: float
    se: float


@dataclass(frozen=True, eq=False)
class IVDistribution:
    """Probability vector ``(v_0, ..., v_d)``.

    ``exact`` optionally carries the same weights as ``Fraction`` objects.
    """

    probs: np.ndarray
    exact: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).ravel()
        if p.size == 0:
            raise ParameterError("distribution needs at least one atom")
        if np.any(p < 0) or abs(math.fsum(p) - 1.0) > 1e-12:
            raise InvariantError("intrinsic volumes must be nonnegative and sum to one")
        if self.exact is not None and (len(self.exact) != p.size or sum(self.exact) != 1):
            raise InvariantError("exact weights must match probs and sum to one")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_fractions(cls, weights: Sequence[Fraction]) -> "IVDistribution":
        w = tuple(Fraction(x) for x in weights)
        return cls(np.array([float(x) for x in w]), w)

    @classmethod
    def point_mass(cls, d: int, k: int) -> "IVDistribution":
        w = [Fraction(0)] * (d + 1)
        w[k] = Fraction(1)
        return cls.from_fractions(w)

    @property
    def d(self) -> int:
        return self.probs.size - 1

    @property
    def delta(self) -> float:
        j = np.arange(self.d + 1)
        return math.fsum(j * self.probs)

    @property
    def tau_sq(self) -> float:
        j = np.arange(self.d + 1)
        mu = self.delta
        return math.fsum((j - mu) ** 2 * self.probs)

    @property
    def sigma_sq(self) -> float:
        return self.tau_sq + 2.0 * self.delta

    def cdf(self, m: int) -> float:
        """``P(V <= m)``."""
        if m < 0:
            return 0.0
        return min(1.0, math.fsum(self.probs[: m + 1]))

    def reversed(self) -> "IVDistribution":
        """Law of ``d - V`` (the polar cone's distribution)."""
        return IVDistribution(self.probs[::-1].copy(), None if self.exact is None else self.exact[::-1])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.choice(self.d + 1, size=size, p=self.probs)

    def rows(self) -> list[tuple[int, float]]:
        return [(j, float(v)) for j, v in enumerate(self.probs)]


# Exact laws ------------------------------------------------------------------

def _chamber_a_weights(d: int):
    """Coefficients of ``prod_{k=1}^d (s + k - 1) / k`` in increasing powers of ``s``."""
    if d <= EXACT_RATIONAL_MAX_D:
        coef = [Fraction(1)]
        for k in range(1, d + 1):
            new = [Fraction(0)] * (len(coef) + 1)
            for i, c in enumerate(coef):
                new[i] += c * Fraction(k - 1, k)
                new[i + 1] += c * Fraction(1, k)
            coef = new
        return coef, True
    coef = np.array([1.0])
    for k in range(1, d + 1):
        coef = np.concatenate([coef * ((k - 1) / k), [0.0]]) + np.concatenate([[0.0], coef / k])
    return coef / coef.sum(), False


def exact_distribution(cone: Cone) -> IVDistribution:
    """Intrinsic volumes for the orthant, subspaces and the type-A chamber.

    Negations share the law of the inner cone; polars reverse it.
    """
    if isinstance(cone, Negated):
        return exact_distribution(cone.inner)
    if isinstance(cone, PolarOf):
        return exact_distribution(cone.inner).reversed()
    if isinstance(cone, Orthant):
        d = cone.d
        if d <= 1000:
            return IVDistribution.from_fractions([Fraction(math.comb(d, j), 2**d) for j in range(d + 1)])
        # binom(d, j) overflows and 2^-d underflows past d ~ 1030, so use the pmf
        p = stats.binom.pmf(np.arange(d + 1), d, 0.5)
        return IVDistribution(p / p.sum())
    if isinstance(cone, Subspace):
        return IVDistribution.point_mass(cone.d, cone.k)
    if isinstance(cone, ChamberA):
        coef, exact = _chamber_a_weights(cone.d)
        return IVDistribution.from_fractions(coef) if exact else IVDistribution(coef)
    raise CapabilityError(f"no exact intrinsic volumes for {type(cone).__name__}")


class ClosedFormMoments(NamedTuple):
    delta: float
    tau_sq: float
    asymptotic: bool = False


def closed_form_moments(cone: Cone) -> ClosedFormMoments:
    """Statistical dimension and conic variance for the catalogued cones.

    ``asymptotic`` is set when the value is only a large-dimension
    approximation: for circular cones ``d sin^2(alpha)`` omits an O(1) term
    (see :func:`circular_delta` for the exact value), and the PSD variance
    is a leading-order expression in ``n``.
    """
    if isinstance(cone, Negated):
        return closed_form_moments(cone.inner)
    if isinstance(cone, PolarOf):
        inner = closed_form_moments(cone.inner)
        return ClosedFormMoments(cone.dim - inner.delta, inner.tau_sq, inner.asymptotic)
    if isinstance(cone, Orthant):
        return ClosedFormMoments(cone.d / 2.0, cone.d / 4.0)
    if isinstance(cone, Subspace):
        return ClosedFormMoments(float(cone.k), 0.0)
    if isinstance(cone, Circular):
        d, a = cone.d, cone.alpha
        return ClosedFormMoments(d * math.sin(a) ** 2, 0.5 * (d - 2) * math.sin(2 * a) ** 2, True)
    if isinstance(cone, PSD):
        n = cone.n
        return ClosedFormMoments(n * (n + 1) / 4.0, (4.0 / math.pi**2 - 0.25) * n * n, True)
    if isinstance(cone, ChamberA):
        k = np.arange(1, cone.d + 1, dtype=float)
        return ClosedFormMoments(math.fsum(1 / k), math.fsum(1 / k - 1 / k**2))
    if isinstance(cone, ChamberBC):
        h = 0.5 / np.arange(1, cone.d + 1, dtype=float)
        return ClosedFormMoments(math.fsum(h), math.fsum(h * (1 - h)))
    raise CapabilityError(f"no closed-form moments for {type(cone).__name__}; use estimate_moments")


# Monte Carlo -------------------------------------------------------------------

@dataclass(frozen=True)
class MomentEstimates:
    delta_hat: float
    sigma_sq_hat: float
    tau_sq_hat: float
    v_hat: float
    width_hat: float
    n_samples: int
    se_delta: float
    se_sigma_sq: float
    se_tau_sq: float
    se_v: float
    se_width: float
    d: int
    steiner_cov: float = math.nan  # -Cov(||Pi_C g||^2, ||Pi_C0 g||^2)
    se_steiner_cov: float = math.nan

    @property
    def tau_sq_degenerate(self) -> bool:
        """True when the variance estimate came out negative (pure noise)."""
        return self.tau_sq_hat < 0

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["tau_sq_degenerate"] = self.tau_sq_degenerate
        return out


def _draw(cone: Cone, stream: RngStream, size: int):
    g = stream.generator().standard_normal((size, cone.dim))
    return g, *cone.split(g)


def _moment_block(cone: Cone, n_half: int, stream: RngStream, size: int, start: int):
    _, P, Q = _draw(cone, stream, size)
    idx = start + np.arange(size)
    in_a = idx < n_half
    return {
        "G": np.einsum("ij,ij->i", P, P),
        "Gp": np.einsum("ij,ij->i", Q, Q),
        "sum_a": P[in_a].sum(axis=0),
        "sum_b": P[~in_a].sum(axis=0),
        "S2": P.T @ P,
    }


def _se(infl: np.ndarray) -> float:
    return float(np.std(infl, ddof=1) / math.sqrt(infl.size))


def estimate_moments(cone: Cone, n: int, stream: RngStream, workers: int = 1,
                     block_size: int = DEFAULT_BLOCK) -> MomentEstimates:
    """Monte Carlo estimates of ``delta, sigma^2, tau^2, v, w`` with standard errors.

    ``v = ||E Pi_C(g)||^2`` uses the split-sample product
    ``<mean of first half, mean of second half>``, which is unbiased.
    Standard errors come from first-order influence functions.
    """
    if n < 2:
        raise ParameterError("estimate_moments needs n >= 2")
    n_half = n // 2
    blocks = run_blocks(partial(_moment_block, cone, n_half), n, stream, workers, block_size)
    G = np.concatenate([b["G"] for b in blocks])
    Gp = np.concatenate([b["Gp"] for b in blocks])
    sum_a = np.sum([b["sum_a"] for b in blocks], axis=0)
    sum_b = np.sum([b["sum_b"] for b in blocks], axis=0)
    S2 = np.sum([b["S2"] for b in blocks], axis=0)

    delta = float(np.mean(G))
    c = G - delta
    sigma_sq = float(np.var(G, ddof=1))
    tau_sq = sigma_sq - 2.0 * delta
    norms = np.sqrt(G)
    width = float(norms.mean())

    n_b = n - n_half
    mean_a, mean_b = sum_a / n_half, sum_b / n_b
    v_hat = float(mean_a @ mean_b)
    mu = (sum_a + sum_b) / n
    Sigma = S2 / n - np.outer(mu, mu)
    var_v = float(mu @ Sigma @ mu) * (1.0 / n_half + 1.0 / n_b) + float(np.sum(Sigma * Sigma)) / (n_half * n_b)

    cp = Gp - Gp.mean()
    cov = float(np.mean(c * cp))
    return MomentEstimates(
        delta_hat=delta,
        sigma_sq_hat=sigma_sq,
        tau_sq_hat=tau_sq,
        v_hat=v_hat,
        width_hat=width,
        n_samples=int(n),
        se_delta=_se(G),
        se_sigma_sq=_se(c * c),
        se_tau_sq=_se(c * c - 2.0 * c),
        se_v=math.sqrt(max(var_v, 0.0)),
        se_width=_se(norms),
        d=cone.dim,
        steiner_cov=-cov,
        se_steiner_cov=_se(c * cp),
    )


def _face_block(cone: Cone, stream: RngStream, size: int, start: int):
    g = stream.generator().standard_normal((size, cone.dim))
    return cone.face_dims(g)


def sample_face_dims(cone: Cone, n: int, stream: RngStream, workers: int = 1,
                     block_size: int = DEFAULT_BLOCK) -> np.ndarray:
    """Face dimensions of ``Pi_C(g)`` for ``n`` Gaussian draws (i.e. draws of ``V``)."""
    if not cone.polyhedral_faces:
        raise CapabilityError(f"face dimension is not available for {type(cone).__name__}")
    return np.concatenate(run_blocks(partial(_face_block, cone), n, stream, workers, block_size))


def sample_V(cone: Cone, n: int, stream: RngStream, workers: int = 1,
             block_size: int = DEFAULT_BLOCK) -> IVDistribution:
    """Empirical intrinsic-volume law from face dimensions of Gaussian projections."""
    if n < 1:
        raise ParameterError("sample_V needs n >= 1")
    V = sample_face_dims(cone, n, stream, workers, block_size)
    counts = np.bincount(V, minlength=cone.dim + 1)
    return IVDistribution.from_fractions([Fraction(int(c), int(n)) for c in counts])


def _sq_block(cone: Cone, stream: RngStream, size: int, start: int):
    _, P, Q = _draw(cone, stream, size)
    return np.stack([np.einsum("ij,ij->i", P, P), np.einsum("ij,ij->i", Q, Q)], axis=1)


def sample_squared_projections(cone: Cone, n: int, stream: RngStream, workers: int = 1,
                               block_size: int = DEFAULT_BLOCK) -> tuple[np.ndarray, np.ndarray]:
    """Samples of ``(||Pi_C(g)||^2, ||Pi_{C^0}(g)||^2)``."""
    out = np.concatenate(run_blocks(partial(_sq_block, cone), n, stream, workers, block_size))
    return out[:, 0], out[:, 1]


def mean_var_se(x) -> tuple[float, float, float, float]:
    """``(mean, se_mean, variance, se_variance)`` of a sample."""
    x = np.asarray(x, dtype=float)
    c = x - x.mean()
    return float(x.mean()), _se(x), float(np.var(x, ddof=1)), _se(c * c)


# Variance bounds ------------------------------------------------------------------

@dataclass(frozen=True)
class VarianceBounds:
    """``min(v^2, 4 b^2) / b <= tau^2 <= 2 v`` with ``b = sqrt(d delta / 2)``."""

    v: float
    b: float
    lower: float
    upper: float
    clamped: bool = False  # v estimate was negative and set to zero


def variance_bounds(v: float | MomentEstimates, delta: float | None = None,
                    d: int | None = None) -> VarianceBounds:
    """Bounds on the conic variance from ``v = ||E Pi_C(g)||^2`` and ``delta``.

    Accepts either explicit ``(v, delta, d)`` or a :class:`MomentEstimates`.
    """
    if isinstance(v, MomentEstimates):
        est = v
        v, delta, d = est.v_hat, est.delta_hat, est.d if d is None else d
    if delta is None or d is None:
        raise ParameterError("variance_bounds needs delta and d")
    if delta <= 0:
        raise DegenerateError("statistical dimension must be positive")
    clamped = False
    if v < 0:
        warnings.warn(f"negative v estimate {v:g} clamped to 0", RuntimeWarning, stacklevel=2)
        v, clamped = 0.0, True
    b = math.sqrt(d * delta / 2.0)
    return VarianceBounds(v=v, b=b, lower=min(v * v, 4 * b * b) / b, upper=2.0 * v, clamped=clamped)


def steiner_covariance_exact(ivd: IVDistribution) -> float:
    """``-Cov(||Pi_C g||^2, ||Pi_C0 g||^2) = delta (d - delta) - sum_j j (d - j) v_j``."""
    d = ivd.d
    j = np.arange(d + 1)
    delta = ivd.delta
    return delta * (d - delta) - math.fsum(j * (d - j) * ivd.probs)


def steiner_covariance(cone: Cone, n: int, stream: RngStream, workers: int = 1) -> Estimate:
    """Monte Carlo ``-Cov(||Pi_C g||^2, ||Pi_C0 g||^2)``, an estimator of ``tau^2``."""
    if n < 2:
        raise ParameterError("steiner_covariance needs n >= 2")
    G, Gp = sample_squared_projections(cone, n, stream, workers)
    c, cp = G - G.mean(), Gp - Gp.mean()
    return Estimate(-float(np.mean(c * cp)), _se(c * cp))


class MSFCheck(NamedTuple):
    lhs: float
    se: float
    rhs: float


_MSF_FUNCS = {
    "first": lambda a, b: a,
    "product": lambda a, b: a * b,
    "laplace": lambda a, b: np.exp(-a / 4.0),
}


def master_steiner_rhs(ivd: IVDistribution, f: str) -> float:
    """``sum_j E f(Y_j, Y'_{d-j}) v_j`` with independent chi-squares, in closed form."""
    d = ivd.d
    j = np.arange(d + 1, dtype=float)
    if f == "first":
        terms = j
    elif f == "product":
        terms = j * (d - j)
    elif f == "laplace":
        terms = (2.0 / 3.0) ** (j / 2.0)
    else:
        raise CapabilityError(f"unsupported test function {f!r}; choose from {sorted(_MSF_FUNCS)}")
    return math.fsum(terms * ivd.probs)


def master_steiner_moment_check(cone: Cone, f: str, n: int, stream: RngStream,
                                workers: int = 1) -> MSFCheck:
    """Compare a Monte Carlo functional of the projection pair with its mixture form."""
    if f not in _MSF_FUNCS:
        raise CapabilityError(f"unsupported test function {f!r}; choose from {sorted(_MSF_FUNCS)}")
    rhs = master_steiner_rhs(exact_distribution(cone), f)
    G, Gp = sample_squared_projections(cone, n, stream, workers)
    vals = _MSF_FUNCS[f](G, Gp)
    return MSFCheck(float(vals.mean()), _se(vals), rhs)


def chi_mean(k: int) -> float:
    """``E ||g_k|| = sqrt(2) Gamma((k+1)/2) / Gamma(k/2)``."""
    if k == 0:
        return 0.0
    return math.sqrt(2.0) * math.exp(math.lgamma((k + 1) / 2) - math.lgamma(k / 2))


def width_sandwich_check(est: MomentEstimates, k: float = 4.0) -> tuple[bool, float, float]:
    """Check ``w^2 <= delta <= w^2 + 1`` up to ``k`` standard errors.

    Returns ``(holds, lower_margin, upper_margin)``; margins are
    nonnegative exactly when the corresponding side holds.
    """
    w2 = est.width_hat**2
    se = math.hypot(est.se_delta, 2.0 * est.width_hat * est.se_width)
    lower_margin = est.delta_hat - (w2 - k * se)
    upper_margin = (w2 + 1.0 + k * se) - est.delta_hat
    return (lower_margin >= 0 and upper_margin >= 0), lower_margin, upper_margin


def circular_delta(d: int, alpha: float) -> float:
    """Statistical dimension of ``Circular(d, alpha)`` by one-dimensional quadrature.

    Conditions on the norm ``r`` of the off-axis part (a chi variable with
    ``d - 1`` degrees of freedom) and integrates the axis coordinate in
    closed form; used to check the large-``d`` formula ``d sin^2(alpha)``.
    """
    if d < 2:
        raise ParameterError("circular cone needs d >= 2")
    if not 0.0 < alpha < math.pi / 2:
        raise ParameterError("alpha must lie in (0, pi/2)")
    from scipy import integrate

    ca, sa = math.cos(alpha), math.sin(alpha)
    N = stats.norm
    chi = stats.chi(d - 1)

    def given_r(r):
        hi = r * ca / sa   # t above this: inside the cone
        lo = -r * sa / ca  # t below this: inside the polar
        # E[(t^2 + r^2) 1{t > hi}]
        inside = (r * r + 1.0) * N.sf(hi) + hi * N.pdf(hi)
        # E[(t cos + r sin)^2 1{lo < t < hi}]
        p = N.cdf(hi) - N.cdf(lo)
        m1 = N.pdf(lo) - N.pdf(hi)
        m2 = p - (hi * N.pdf(hi) - lo * N.pdf(lo))
        return (inside + ca * ca * m2 + 2 * r * sa * ca * m1 + r * r * sa * sa * p) * chi.pdf(r)

    hi_r = chi.ppf(1 - 1e-16) + 5.0
    val, _ = integrate.quad(given_r, 0.0, hi_r, epsabs=1e-12, epsrel=1e-12, limit=200)
    return float(val)
