import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from conicvol.cones import (
    PSD, ChamberA, ChamberBC, Circular, L1Descent, Negated, Orthant, PolarOf, SchattenDescent,
    Subspace, cone_from_dict, face_dimension, isotonic_rows, negate, pava, polar, project,
    project_l1_polar, project_schatten_polar,
)
from conicvol.errors import CapabilityError, ParameterError, ShapeError
from conicvol.solver import golden_section

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@given(arrays(float, st.integers(1, 30), elements=finite))
@settings(max_examples=100, deadline=None)
def test_pava_is_isotonic_projection(y):
    fit, _ = pava(y)
    assert np.all(np.diff(fit) >= -1e-9 * (1 + np.abs(y).max()))
    # optimality: residual orthogonal to the fit and block means preserved
    assert abs(np.dot(y - fit, fit)) <= 1e-7 * (1 + np.dot(y, y))
    assert abs(fit.sum() - y.sum()) <= 1e-9 * (1 + np.abs(y).sum())


def test_isotonic_rows_matches_pava():
    X = np.random.default_rng(2).standard_normal((20, 9))
    R = isotonic_rows(X)
    for x, r in zip(X, R):
        assert np.allclose(pava(x)[0], r, atol=1e-12)


@pytest.mark.parametrize("cone", [
    Orthant(7), Circular(7, 0.9), ChamberA(7), ChamberBC(7), L1Descent(9, 2),
    SchattenDescent(3, 4, 1), PSD(3), Subspace(7, 3), Negated(ChamberA(5)), PolarOf(PSD(3)),
])
def test_projection_idempotent_and_polar_roundtrip(cone):
    X = np.random.default_rng(4).standard_normal((50, cone.dim))
    P, Q = cone.split(X)
    P2, Q2 = cone.split(P)
    assert np.allclose(P2, P, atol=1e-8)
    assert np.allclose(Q2, 0.0, atol=1e-8)
    pol = polar(cone)
    Pp, Qp = pol.split(X)
    assert np.allclose(Pp, Q, atol=1e-8)
    assert np.allclose(Qp, P, atol=1e-8)


def test_projection_beats_random_cone_points():
    cone = Circular(5, 0.5)
    rng = np.random.default_rng(8)
    x = rng.standard_normal(5)
    res = project(cone, x)
    cands = cone.project_rows(rng.standard_normal((2000, 5)) * 3)
    assert np.all(np.sum((cands - x) ** 2, axis=1) >= res.dist_sq - 1e-12)


def test_orthant_face_dimension():
    assert face_dimension(Orthant(4), [1.0, -1.0, 2.0, -3.0]) == 2
    assert project(Orthant(3), np.array([1.0, -2.0, 0.5])).face_dim == 2


def test_face_dimension_unavailable_for_smooth_cones():
    with pytest.raises(CapabilityError):
        face_dimension(Circular(3, 0.5), [1.0, 0.0, 0.0])


def test_chamber_a_face_counts_blocks():
    # sorted isotonic fit with blocks {0,1},{2} -> 2 distinct levels
    assert face_dimension(ChamberA(3), [2.0, 1.0, 5.0]) == 2
    assert face_dimension(ChamberA(3), [3.0, 2.0, 1.0]) == 1


def test_circular_known_cases():
    cone = Circular(3, math.pi / 4)
    inside = np.array([[2.0, 0.5, 0.5]])
    assert np.allclose(cone.project_rows(inside), inside)
    polar_pt = np.array([[-2.0, 0.5, 0.5]])
    assert np.allclose(cone.project_rows(polar_pt), 0.0)


def test_psd_projection_clips_eigenvalues():
    M = np.diag([2.0, -1.0, 0.5])
    P = PSD(3).project_rows(M.reshape(1, -1)).reshape(3, 3)
    assert np.allclose(P, np.diag([2.0, 0.0, 0.5]))


def test_l1_polar_matches_golden_section():
    rng = np.random.default_rng(12)
    d, s = 12, 3
    for _ in range(20):
        x = rng.standard_normal(d) * 2
        gam, _ = project_l1_polar(d, s, x)

        def obj(g):
            return float(np.sum((x[:s] - g) ** 2) + np.sum(np.maximum(np.abs(x[s:]) - g, 0) ** 2))
        g_ref, f_ref = golden_section(obj, 0.0, 20.0, 1e-12)
        assert obj(gam) <= f_ref + 1e-10


def test_schatten_polar_shape_check():
    with pytest.raises(ShapeError):
        project_schatten_polar(3, 4, 1, np.zeros((4, 3)))
    gam, Q = project_schatten_polar(3, 4, 1, np.random.default_rng(0).standard_normal((3, 4)))
    assert gam >= 0 and Q.shape == (3, 4)


def test_polar_closed_forms():
    assert isinstance(polar(Orthant(3)), Negated)
    assert polar(polar(ChamberA(4))) == ChamberA(4)
    c = polar(Circular(4, 0.3))
    assert isinstance(c, Negated) and c.inner.alpha == pytest.approx(math.pi / 2 - 0.3)
    assert negate(negate(Orthant(2))) == Orthant(2)
    sub = Subspace(5, 2)
    assert polar(sub).k == 3


def test_subspace_zero_dimension_allowed():
    X = np.ones((2, 4))
    P, Q = Subspace(4, 0).split(X)
    assert np.allclose(P, 0) and np.allclose(Q, X)


def test_shape_errors():
    with pytest.raises(ShapeError):
        Orthant(3).project_rows(np.zeros((2, 4)))
    with pytest.raises(ShapeError):
        project(Orthant(3), np.zeros((1, 3)))


@pytest.mark.parametrize("bad", [dict(kind="orthant", d=0), dict(kind="circular", d=3, alpha=2.0),
                                 dict(kind="l1_descent", d=3, s=5)])
def test_invalid_parameters(bad):
    with pytest.raises(ParameterError):
        cone_from_dict(bad)


@pytest.mark.parametrize("cone", [
    Orthant(4), Circular(4, 0.3), PSD(2), ChamberA(3), ChamberBC(3), L1Descent(5, 2),
    SchattenDescent(2, 3, 1), Subspace(4, 2), PolarOf(PSD(2)), Negated(Circular(3, 0.2)),
])
def test_descriptor_roundtrip(cone):
    again = cone_from_dict(cone.to_dict())
    X = np.random.default_rng(3).standard_normal((5, cone.dim))
    assert np.allclose(again.project_rows(X), cone.project_rows(X))


def test_descriptor_errors():
    with pytest.raises(ParameterError):
        cone_from_dict({"kind": "nope"})
    with pytest.raises(ParameterError):
        cone_from_dict({"kind": "orthant"})
    with pytest.raises(ParameterError):
        cone_from_dict([1, 2])
