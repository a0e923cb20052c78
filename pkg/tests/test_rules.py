import numpy as np
import pytest
from hypothesis import given, strategies as st

from fraclap.rules import (aligned_sphere_rule, circle_trapezoid, gauss_jacobi_left, graded, graded_first,
                           smooth_sphere_rule, sphere_design)


@pytest.mark.parametrize("L", [(0, 0), (3, 0), (0, 4), (2, 2)])
def test_graded_integrates_polynomials(L):
    t, w = graded(6, *L)
    for p in range(8):
        assert np.dot(w, t ** p) == pytest.approx(1 / (p + 1), rel=1e-12)


@given(st.floats(-0.9, 0.9))
def test_jacobi_weight(gamma):
    t, w = gauss_jacobi_left(5, gamma)
    assert np.dot(w, t ** 2) == pytest.approx(1 / (3 + gamma), rel=1e-10)


def test_graded_first_absorbs_weight():
    t, w = graded_first(6, 4, -0.5)
    assert np.dot(w, np.cos(t)) == pytest.approx(1.8090484758005438, rel=1e-9)


def test_circle_trapezoid_means():
    d, w = circle_trapezoid(16)
    assert np.dot(w, d[:, 0] ** 2) == pytest.approx(0.5)
    assert abs(np.dot(w, d[:, 0] * d[:, 1])) < 1e-15


def test_sphere_design_moments():
    d, w = sphere_design(100)
    assert d.shape[0] >= 100 and w.sum() == pytest.approx(1.0)
    assert np.dot(w, d[:, 2] ** 4) == pytest.approx(1 / 5, rel=1e-12)


def test_smooth_rule_rejects_high_dimension():
    with pytest.raises(NotImplementedError):
        smooth_sphere_rule(4, 10)


@pytest.mark.parametrize("n", [2, 3])
def test_aligned_rule_measures_cap_exactly(n):
    # fraction of the sphere |y - x| = rho lying inside the unit ball
    axis = np.eye(n)[:1]
    d, rho = 0.6, 0.7
    dirs, w = aligned_sphere_rule(n, axis, np.array([d]), np.array([[rho]]), np.array([1.0]), 6, 3,
                                  n_azimuth=16)
    pts = -d * np.eye(n)[0] + rho * dirs[0, 0]
    inside = (np.linalg.norm(pts, axis=1) < 1).astype(float)
    mu = (rho ** 2 + d ** 2 - 1) / (2 * rho * d)
    want = np.arccos(mu) / np.pi if n == 2 else (1 - mu) / 2
    assert np.dot(w[0, 0], inside) == pytest.approx(want, rel=1e-12)
