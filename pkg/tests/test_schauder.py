import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fraclap import Ball, DirichletProblem, ModulusSpec, constants
from fraclap.catalog import bump, constant, cos_x1, harmonic_exterior, power
from fraclap.core import ArgumentError, DomainError
from fraclap.kernels import bubble_field
from fraclap.schauder import (CascadeConfig, DepthError, Probe, VerificationReport, default_pairs,
                              default_riesz_pairs, dyadic_cascade, fit_exponent, theorem_rhs,
                              verify_lemma_derivative_estimate, verify_lemma_supnorm_estimate, verify_riesz_holder,
                              verify_schauder)

SCALES = [2.0 ** -j for j in range(3, 9)]


def test_fit_exponent_examples():
    assert fit_exponent([(t, t ** 2) for t in SCALES]) == pytest.approx(2.0, abs=1e-10)
    assert fit_exponent([(t, 3.0) for t in SCALES]) == pytest.approx(0.0, abs=1e-10)
    rng = np.random.default_rng(1)
    noisy = [(t, t ** 1.5 * (1 + 0.01 * rng.standard_normal())) for t in SCALES]
    assert fit_exponent(noisy) == pytest.approx(1.5, abs=0.05)


def test_fit_exponent_rejects_bad_samples():
    with pytest.raises(ArgumentError):
        fit_exponent([(1, 1), (2, 2), (3, 3)])
    with pytest.raises(ArgumentError):
        fit_exponent([(1, 1), (2, 0), (3, 3), (4, 4)])


@given(st.floats(1e-3, 1e3), st.lists(st.floats(0.01, 10.0), min_size=6, max_size=6))
def test_fit_exponent_scale_invariance(c, vals):
    samples = list(zip(SCALES, vals))
    a = fit_exponent(samples)
    b = fit_exponent([(t, c * v) for t, v in samples])
    assert abs(a - b) < 1e-12 * max(1.0, abs(a))


def test_theorem_rhs_power_closed_form():
    a, s, c = 0.3, 0.25, 8.0
    m = ModulusSpec.power(1.0, a)
    for d in SCALES:
        q = a + 2 * s
        want = d * (0.3 + 0.7) + (c * d) ** q / q + d * (1 - d ** (q - 1)) / (q - 1)
        assert theorem_rhs(d, s, m, 0.3, 0.7) == pytest.approx(want, rel=1e-12)


def test_theorem_rhs_zero_and_errors():
    assert theorem_rhs(0.1, 0.75, ModulusSpec.zero(), 0.0, 0.0) == 0.0
    with pytest.raises(DomainError):
        theorem_rhs(0.6, 0.5, ModulusSpec.zero(), 0, 0)


def test_theorem_rhs_matches_the_holder_conclusion():
    # alpha + 2s < 1: rhs / delta^(alpha+2s) stays within fixed bounds
    m = ModulusSpec.power(1.0, 0.3)
    r = [theorem_rhs(d, 0.2, m, 1.0, 1.0) / d ** 0.7 for d in SCALES]
    assert max(r) / min(r) < 3


@given(st.floats(1e-3, 0.25), st.floats(0, 0.25), st.floats(0, 2), st.floats(0, 2),
       st.sampled_from([0.25, 0.5, 0.75]), st.floats(0.55, 1.0))
def test_theorem_rhs_monotone(d, dd, u, f, s, a):
    m = ModulusSpec.power(1.0, a)
    base = theorem_rhs(d, s, m, u, f)
    assert theorem_rhs(d + dd, s, m, u, f) >= base * (1 - 1e-12)
    assert theorem_rhs(d, s, m, u + 0.1, f + 0.1) >= base
    assert theorem_rhs(d, s, ModulusSpec.power(1.5, a), u, f) >= base


def test_report_json_round_trip():
    r = VerificationReport("x", [Probe(0, 0.125, 1.0, 2.0, 0.5, "a"), Probe(1, 1 / 3, 0.1, math.pi, 0.2, "")],
                           fitted_exponent=0.7, passed=True, notes="n", extras={"k": [1.0, 2.5]})
    back = VerificationReport.from_json(r.to_json())
    assert back == r


def test_schauder_coincident_pair_and_domain(unit2, zero2):
    k = constants(2, 0.25)
    p = DirichletProblem(unit2, cos_x1(2), zero2, 0.25)
    m = ModulusSpec.power(1.0, 1.0)
    rep = verify_schauder(p, m, [(np.zeros(2), np.zeros(2))], CascadeConfig(order=0.25), k)
    assert rep.probes[0].lhs == 0 and rep.probes[0].ratio == 0 and rep.passed
    with pytest.raises(DomainError):
        verify_schauder(p, m, [(np.array([0.6, 0.0]), np.zeros(2))], CascadeConfig(order=0.25), k)


def test_schauder_rejects_a_wrong_modulus(unit2, zero2):
    p = DirichletProblem(unit2, cos_x1(2), zero2, 0.25)
    with pytest.raises(ArgumentError):
        verify_schauder(p, ModulusSpec.power(0.01, 1.0), default_pairs(2), CascadeConfig(order=0.25),
                        constants(2, 0.25))


def test_cascade_is_exact_for_constant_data():
    s = 0.5
    k = constants(2, s)
    u = bubble_field(Ball.unit(2), 1.0, k)
    cr = dyadic_cascade(u, constant(2, 1.0), CascadeConfig(order=s, depth=3), k, residuals=False)
    assert all(lv.sup_dev <= 1e-3 for lv in cr.levels)


def test_cascade_depth_limit():
    k = constants(2, 0.5)
    with pytest.raises(DepthError):
        dyadic_cascade(bubble_field(Ball.unit(2), 1.0, k), constant(2, 1.0), CascadeConfig(order=0.5, depth=7), k)


def test_cascade_config_validation():
    with pytest.raises(ArgumentError):
        CascadeConfig(rho=1.0)
    with pytest.raises(ArgumentError):
        CascadeConfig(depth=1)


def test_riesz_holder_of_zero_field():
    z = constant(2, 0.0)
    z = type(z)(z.evaluator, 2, support=Ball((0, 0), 1))
    rep = verify_riesz_holder(z, 0.25, default_riesz_pairs((0.5, 0), 2), constants(2, 0.25))
    assert all(p.lhs == 0 for p in rep.probes) and rep.passed


def test_riesz_holder_smooth_bump():
    rep = verify_riesz_holder(bump(2, 0.5), 0.25, default_riesz_pairs((0.5, 0), 2), constants(2, 0.25))
    assert rep.passed and rep.fitted_exponent >= 0.43


def test_riesz_holder_sharp_plateau():
    # bounded data suffice for the 2s exponent; fitted over 2^-3..2^-8 at the support edge
    from fraclap.catalog import plateau

    rep = verify_riesz_holder(plateau(2, 0.5), 0.25, default_riesz_pairs((0.5, 0), 2), constants(2, 0.25))
    assert rep.fitted_exponent >= 0.5 - 0.07


def test_critical_order_is_informational():
    rep = verify_riesz_holder(bump(2, 0.5), 0.5, default_riesz_pairs((0.5, 0), 2), constants(2, 0.5))
    assert rep.informational


def test_lemma31_constant_data_has_no_gradient():
    rep = verify_lemma_derivative_estimate([constant(2, 1.0)], [1, 0.5, 0.25, 0.125], 1, constants(2, 0.5))
    assert max(p.lhs for p in rep.probes) <= 1e-4 and rep.passed


def test_lemma31_second_derivatives_scale():
    rep = verify_lemma_derivative_estimate([harmonic_exterior(2, 5)], [1, 0.5, 0.25, 0.125], 2,
                                           constants(2, 0.5))
    assert rep.extras["exponents"][0] == pytest.approx(-2.0, abs=0.1)


def test_lemma32_constant_rhs_slope():
    s = 0.25
    rep = verify_lemma_supnorm_estimate([constant(2, 1.0)], [1, 0.5, 0.25, 0.125], constants(2, s))
    assert rep.extras["exponents"][0] == pytest.approx(2 * s, abs=1e-3)


def test_lemma32_zero_rhs():
    rep = verify_lemma_supnorm_estimate([constant(2, 0.0)], [1, 0.5, 0.25, 0.125], constants(2, 0.25))
    assert all(p.lhs == 0 for p in rep.probes)


def test_resolution_floor():
    with pytest.raises(DepthError):
        verify_lemma_supnorm_estimate([constant(2, 1.0)], [1, 0.01], constants(2, 0.25))
