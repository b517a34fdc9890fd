import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from conicvol.cones import Orthant, ChamberA
from conicvol.errors import DegenerateError, DomainError, InvariantError
from conicvol.intrinsic_volumes import IVDistribution, exact_distribution
from conicvol.normal_approx import (
    BoundReport, EmpiricalCDF, L_and_B, berry_esseen_vc, char_identity_check,
    concentration_laplace, concentration_tail, concentration_tail_companion, h_small,
    joint_correlation, kolmogorov_distance, log_plus, rate_constant_check, rate_constant_limit,
    sample_W, sample_WV, smoothing_bound, tv_bound_distance, tv_bound_projection,
    tv_bound_shifted, xi,
)
from conicvol.numerics import RngStream


def test_log_plus():
    assert log_plus(0.5) == 0.0 and log_plus(math.e) == pytest.approx(1.0)


def test_h_small_domain():
    with pytest.raises(DomainError):
        h_small(1.0)


def test_berry_esseen_simplified_requires_delta_8():
    be = berry_esseen_vc(5.0, 2.0)
    assert not be.simplified.valid and math.isinf(be.simplified.value)
    with pytest.raises(DegenerateError):
        berry_esseen_vc(50.0, 0.0)


def test_berry_esseen_orthant_values_are_vacuous_but_finite():
    be = berry_esseen_vc(5000.0, 2500.0)
    assert be.simplified.valid and be.simplified.vacuous
    assert math.isfinite(be.full.value)


@given(st.floats(1.0, 1e7), st.floats(0.01, 2.0))
@settings(max_examples=200, deadline=None)
def test_full_bound_equals_smoothing_bound_when_first_branch_active(delta, ratio):
    tau_sq = ratio * delta
    tau = math.sqrt(tau_sq)
    L, B = L_and_B(delta, tau_sq)
    assert L <= tau / 8 * (1 + 1e-12)
    full = berry_esseen_vc(delta, tau_sq).full.value
    if L > 0 and tau / delta**3 >= delta ** (-8 / 3):
        assert full == pytest.approx(smoothing_bound(L, B), rel=1e-9)


def test_L_and_B_invariant():
    with pytest.raises(InvariantError):
        L_and_B(10.0, 21.0)
    assert L_and_B(10.0, 0.0) == (0.0, 0.0)


def test_tv_bounds():
    r = tv_bound_projection(100, 200, d=200)
    assert r.value == 0.8 and r.extra["self_dual"] == pytest.approx(8 * math.sqrt(2) / math.sqrt(200))
    assert tv_bound_shifted(4.0, 0.0, 16.0).value == pytest.approx(2.0)
    assert tv_bound_distance(4.0, 32.0).value == pytest.approx(1.0)
    with pytest.raises(DomainError):
        tv_bound_projection(0.0, 1.0)


def test_bound_report_rejects_negative():
    with pytest.raises(Exception):
        BoundReport("x", {}, -1.0)


def test_concentration_forms_agree():
    # threshold of the companion form is where the h-form bound equals exp(-t)
    E, t = 7.0, 3.0
    thr, prob = concentration_tail_companion(E, t)
    assert concentration_tail(E, thr) == pytest.approx(prob, rel=1e-12)
    assert concentration_laplace(E, 0.0) == 1.0
    with pytest.raises(DomainError):
        concentration_laplace(E, 0.5)


def test_concentration_tail_small_t_has_no_cancellation():
    # h(u) ~ u^2 / 2 for small u
    E, t = 5.0, 1e-6
    u = t / (2 * E)
    assert -math.log(concentration_tail(E, t)) == pytest.approx(E * u * u / 2, rel=1e-5)


def test_empirical_cdf_and_ks():
    e = EmpiricalCDF([3.0, 1.0, 2.0])
    assert e(2.0) == pytest.approx(2 / 3) and e(0.0) == 0.0
    u = np.linspace(0.005, 0.995, 100)
    # midpoints (i - 1/2) / n sit 1 / (2n) from both sides of every step
    assert kolmogorov_distance(u, stats.uniform.cdf) == pytest.approx(0.005, abs=1e-12)
    x = np.random.default_rng(0).standard_normal(5000)
    assert kolmogorov_distance(x) == pytest.approx(stats.kstest(x, "norm").statistic, abs=1e-15)


def test_sample_W_standardized():
    ivd = exact_distribution(Orthant(40))
    W = sample_W(ivd, 40_000, RngStream(2))
    assert abs(W.mean()) < 4 / math.sqrt(W.size)
    assert abs(W.var() - 1) < 0.05
    # W and V are uncorrelated
    assert abs(joint_correlation(ivd, 40_000, RngStream(3))) < 4 / math.sqrt(40_000)


def test_sample_WV_degenerate():
    with pytest.raises(DegenerateError):
        sample_WV(IVDistribution.point_mass(3, 0), 10, RngStream(0))


def test_xi_real_part():
    for t in (0.1, 0.7, 2.0):
        assert xi(1j * t).real == pytest.approx(math.sin(t) ** 2)


def test_char_identity_small_t():
    chk = char_identity_check(ChamberA(5), [0.1, 0.25, 0.4], 20_000, RngStream(4))
    assert np.all(chk.discrepancy <= 4 * np.maximum(chk.se, 1e-12))


def test_char_identity_rejects_invalid_t():
    with pytest.raises(DomainError):
        char_identity_check(Orthant(3), [1.0], 100, RngStream(0))


def test_rate_constant():
    assert rate_constant_limit(1.0, 0.5) == 0.0
    with pytest.raises(DomainError):
        rate_constant_check(exact_distribution(Orthant(20)), 0.0, 100, RngStream(0))
    chk = rate_constant_check(exact_distribution(Orthant(400)), 0.0, 100_000, RngStream(7))
    assert abs(chk.lhs - chk.rhs) <= 4 * chk.se + 0.05
