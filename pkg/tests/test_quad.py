import numpy as np
import pytest
from scipy.integrate import quad as sq

from fraclap import Ball, ScalarField, constants, QuadBudget
from fraclap.catalog import bump, constant, cos_x1, plateau
from fraclap.core import ArgumentError, DomainError
from fraclap.kernels import bubble_field, sphere_area
from fraclap.quad import (TailUnboundedError, exterior_poisson_integral, frac_laplacian, riesz_field,
                          riesz_potential, riesz_potential_gradient, riesz_values)


def test_constant_field_has_zero_fractional_laplacian():
    k = constants(2, 0.3)
    r = frac_laplacian(constant(2, 3.0), [0.2, -1.0], k)
    assert abs(r.value) < 1e-10 and r.est_error < 1e-10


def test_symbol_of_cosine_three_dimensions():
    k = constants(3, 0.6)
    f = ScalarField(lambda P: np.cos(P[:, 2]), 3, decay=(1.0, 0.0), smoothness="smooth")
    assert frac_laplacian(f, [0, 0, 0], k).value == pytest.approx(1.0, rel=2e-3)


@pytest.mark.parametrize("n", [2, 3])
def test_bubble_identity(n):
    k = constants(n, 0.4)
    b = bubble_field(Ball.unit(n), 1.0, k)
    x = np.zeros(n)
    x[0] = 0.2
    assert frac_laplacian(b, x, k).value == pytest.approx(1.0, abs=2e-3)


def test_unbounded_tail_is_refused():
    f = ScalarField(lambda P: P[:, 0], 2)
    with pytest.raises(TailUnboundedError):
        frac_laplacian(f, [0, 0], constants(2, 0.5))


def test_dimension_mismatch():
    with pytest.raises(ArgumentError):
        frac_laplacian(cos_x1(3), [0, 0, 0], constants(2, 0.5))


def test_missing_smoothness_is_flagged():
    f = ScalarField(lambda P: np.exp(-np.einsum("ij,ij->i", P, P)), 2, decay=(1.0, 0.0))
    assert "smoothness-unasserted" in frac_laplacian(f, [0, 0], constants(2, 0.5)).flags


@pytest.mark.parametrize("s", [0.25, 0.75])
def test_riesz_at_centre_of_radial_bump(s):
    k = constants(2, s)
    f = bump(2, 0.8)
    prof = lambda r: np.exp(1 - 1 / (1 - (r / 0.8) ** 2)) if r < 0.8 else 0.0
    want = k.riesz_a * sphere_area(2) * sq(lambda r: r ** (2 * s - 1) * prof(r), 0, 0.8, limit=200)[0]
    assert riesz_potential(f, [0, 0], k).value == pytest.approx(want, rel=1e-6)


def test_riesz_scaling_covariance():
    k = constants(2, 0.35)
    f = plateau(2, 0.5)
    x = np.array([0.3, 0.4])
    lam = 0.5
    big = riesz_potential(f, x, k).value
    small = riesz_potential(plateau(2, 0.5 * lam), lam * x, k).value
    assert small == pytest.approx(lam ** 0.7 * big, rel=1e-5)


def test_riesz_near_and_far_paths_agree():
    k = constants(2, 0.6)
    f = bump(2, 0.5)
    X = np.array([[1.0 - 1e-9, 0.0], [1.0 + 1e-9, 0.0]])  # straddles the far-field switch at 2R
    v = riesz_values(f, X, k)
    assert v[0] == pytest.approx(v[1], rel=1e-6)


def test_riesz_gradient_matches_differences():
    k = constants(2, 0.75)
    f = bump(2, 0.6)
    x, h = np.array([0.2, 0.1]), 1e-4
    fd = [(riesz_potential(f, x + h * e, k).value - riesz_potential(f, x - h * e, k).value) / (2 * h)
          for e in np.eye(2)]
    assert np.allclose(riesz_potential_gradient(f, x, k), fd, rtol=1e-5, atol=1e-8)


def test_riesz_of_zero_and_unsupported_input():
    k = constants(2, 0.3)
    z = ScalarField(lambda P: np.zeros(P.shape[0]), 2, support=Ball((0, 0), 1))
    assert riesz_potential(z, [0.1, 0.0], k).value == 0.0
    with pytest.raises(Exception):
        riesz_potential(cos_x1(2), [0, 0], k)


def test_riesz_field_decay_envelope():
    k = constants(2, 0.25)
    u = riesz_field(bump(2, 0.5), k)
    assert u.support is None and u.decay[1] == pytest.approx(1.5)
    x = np.array([[4.0, 0.0]])
    assert abs(u.evaluate(x)[0]) <= u.decay[0] * 4.0 ** -1.5 * (1 + 1e-9)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_poisson_kernel_has_unit_mass(s):
    k = constants(2, s)
    r = exterior_poisson_integral(constant(2, 1.0), [0.3, 0.2], Ball((0, 0), 1), k)
    assert r.value == pytest.approx(1.0, abs=1e-6)


def test_poisson_integral_rejects_boundary_points():
    with pytest.raises(DomainError):
        exterior_poisson_integral(constant(2, 1.0), [1.0, 0.0], Ball((0, 0), 1), constants(2, 0.5))


def test_doubling_radial_nodes_keeps_accuracy():
    k = constants(2, 0.25)
    f = cos_x1(2)
    a = frac_laplacian(f, [0, 0], k).value
    b = frac_laplacian(f, [0, 0], k, QuadBudget(radial_nodes=16)).value
    assert abs(a - 1) < 1e-3 and abs(b - 1) < 1e-3
