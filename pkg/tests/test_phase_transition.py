import math
from fractions import Fraction

import numpy as np
import pytest

from conicvol.cones import Orthant, SchattenDescent
from conicvol.errors import DomainError, ParameterError
from conicvol.intrinsic_volumes import IVDistribution, estimate_moments, exact_distribution
from conicvol.numerics import RngStream
from conicvol.phase_transition import (
    PHASE_COLUMNS, crofton_bounds, delta_bounds_l1, eta_schatten,
    gamma_l1, gaussian_prediction, l1_objective, phase_curve, psi_l1, psi_l1_direct,
    psi_schatten, recovery_trial, var_lower_l1, var_lower_schatten,
)


def test_psi_l1_regression():
    # pinned after cross-checking against golden-section minimization
    cur = psi_l1(0.1)
    assert cur.psi == pytest.approx(0.3287935054536302, abs=1e-12)
    assert cur.gamma_star == pytest.approx(1.14017114583574, abs=1e-10)


@pytest.mark.parametrize("rho", [0.01, 0.3, 0.6, 0.99])
def test_psi_l1_is_minimum(rho):
    cur = psi_l1(rho)
    for g in (0.5 * cur.gamma_star, 1.5 * cur.gamma_star):
        assert l1_objective(g, rho) >= cur.psi
    gd, fd = psi_l1_direct(rho)
    assert fd == pytest.approx(cur.psi, abs=1e-9)


def test_psi_l1_domain_and_monotone():
    with pytest.raises(DomainError):
        gamma_l1(0.0)
    vals = [psi_l1(r).psi for r in np.linspace(0.05, 0.95, 10)]
    assert np.all(np.diff(vals) > 0)


def test_delta_bounds_l1():
    b = delta_bounds_l1(100, 10)
    assert b.lower < b.upper < b.chre_upper
    assert b.upper == pytest.approx(100 * psi_l1(0.1).psi)
    full = delta_bounds_l1(10, 10)
    assert full.upper == 10.0
    with pytest.raises(ParameterError):
        delta_bounds_l1(5, 6)


def test_var_lower_l1_regression():
    assert var_lower_l1(0.5) == pytest.approx(0.016907, abs=5e-6)


def test_eta_schatten_at_zero_is_one():
    # E u^2 = 1 under the singular-value law, so shrinking nothing costs the full dimension
    for rho, nu in [(0.2, 1.0), (0.5, 0.5)]:
        assert eta_schatten(0.0, rho, nu) == pytest.approx(1.0, abs=1e-9)


def test_psi_schatten_regression_and_minimality():
    c = psi_schatten(0.25, 1.0)
    assert c.gamma_star == pytest.approx(0.77999, abs=1e-4)
    assert c.psi == pytest.approx(0.65525, abs=1e-4)
    for g in (0.9 * c.gamma_star, 1.1 * c.gamma_star):
        assert eta_schatten(g, 0.25, 1.0) >= c.psi


def test_psi_schatten_against_monte_carlo():
    est = estimate_moments(SchattenDescent(20, 20, 5), 4000, RngStream(8))
    # finite-size deviation from the limit curve is small already at n = 20
    assert est.delta_hat / 400 == pytest.approx(psi_schatten(0.25, 1.0).psi, abs=0.02)


def test_var_lower_schatten_literal_switch():
    assert var_lower_schatten(0.25, 1.0) < var_lower_schatten(0.25, 1.0, literal=True)


def test_crofton_exact_orthant():
    ivd = exact_distribution(Orthant(3))
    cb = crofton_bounds(ivd, 1)
    # 1 - 2 (v_2) = 1 - 2 * 3/8
    assert cb.rational[0] == Fraction(1, 4)
    assert cb.lower <= cb.exact <= cb.upper


def test_crofton_point_mass_and_errors():
    ivd = IVDistribution.point_mass(4, 2)
    assert crofton_bounds(ivd, 1).exact == 0.0
    assert crofton_bounds(ivd, 2).exact == 1.0
    with pytest.raises(ParameterError):
        crofton_bounds(ivd, 5)


def test_crofton_float_law():
    ivd = IVDistribution(np.array([0.25, 0.5, 0.25]))
    cb = crofton_bounds(ivd, 1)
    assert cb.rational is None and cb.exact == pytest.approx(0.5)


def test_gaussian_prediction():
    p = gaussian_prediction(50.0, 20.0, 0.0)
    assert p.phi_t == 0.5 and p.valid
    small = gaussian_prediction(5.0, 2.0, 1.0)
    assert not small.valid and math.isinf(small.error_budget)


def test_recovery_trial_extremes():
    assert recovery_trial(30, 2, 30, RngStream(1)).success
    assert not recovery_trial(30, 10, 3, RngStream(1)).success


def test_phase_curve_small():
    curve = phase_curve(30, 3, (-2.0, 2.0), trials=20, stream=RngStream(3))
    assert len(curve.rows) == 2
    lo, hi = curve.rows
    assert lo.m < hi.m and lo.p_hat <= hi.p_hat
    assert len(lo.as_tuple()) == len(PHASE_COLUMNS)
    assert lo.failed_to_solve == 0 and lo.trials == 20


def test_phase_curve_known_moments_skip_estimation():
    curve = phase_curve(20, 2, (0.0,), trials=4, stream=RngStream(3), delta=8.0, tau_sq=4.0)
    assert curve.rows[0].m == 8 and curve.delta == 8.0
    with pytest.raises(DomainError):
        phase_curve(20, 2, (0.0,), trials=4, delta=8.0, tau_sq=0.0)
