import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orlicz_bilinear import (
    InapplicableError,
    MatrixField,
    NonEllipticError,
    ParameterError,
    delta_p,
    delta_phi,
    ellipticity_report,
    lambda_max_norm,
    lambda_min,
    make_pair,
)
from orlicz_bilinear.config import random_elliptic, reference_random_pair, rotation
from orlicz_bilinear.ellipticity import c_p_constant, cm_dissipativity_check, delta_param
from orlicz_bilinear.oracles import mc_delta_p, mc_lambda_min, mc_norm, rotation_delta_p

POWER4 = make_pair("power:4")


def test_identity_constants():
    for d in (1, 2, 3):
        eye = np.eye(d)
        assert lambda_min(eye) == pytest.approx(1.0, abs=1e-15)
        assert lambda_max_norm(eye) == pytest.approx(1.0, abs=1e-15)
        np.testing.assert_allclose(delta_p(eye, 4), 0.5, atol=1e-15)


@pytest.mark.parametrize("phi", [0.0, 0.3, 1.0, 1.4])
def test_rotation_constants(phi):
    a = rotation(phi, 2)
    np.testing.assert_allclose(lambda_min(a), math.cos(phi), atol=1e-14)
    np.testing.assert_allclose(lambda_max_norm(a), 1.0, atol=1e-14)
    for p in (2.0, 3.0, 4.0, 6.0):
        np.testing.assert_allclose(delta_p(a, p), rotation_delta_p(phi, p), atol=1e-14)


def test_norm_of_diagonal():
    np.testing.assert_allclose(lambda_max_norm(np.diag([2.0, np.exp(0.3j)])), 2.0, rtol=1e-14)


def test_delta_two_is_lambda():
    a, _ = reference_random_pair()
    np.testing.assert_allclose(delta_p(a, 2), lambda_min(a), atol=1e-13)


def test_monte_carlo_oracles_rotation():
    a = rotation(math.pi / 6, 2)
    np.testing.assert_allclose(delta_p(a, 4), math.cos(math.pi / 6) - 0.5, atol=1e-14)
    assert abs(mc_delta_p(a, 4, samples=200_000) - delta_p(a, 4)) < 1e-3


def test_monte_carlo_oracles_random():
    a, _ = reference_random_pair()
    np.testing.assert_allclose(mc_lambda_min(a), lambda_min(a), atol=2e-3)
    np.testing.assert_allclose(mc_norm(a), lambda_max_norm(a), rtol=1e-3)
    mc = mc_delta_p(a, 4, samples=400_000)
    assert mc >= delta_p(a, 4) - 1e-12
    assert mc - delta_p(a, 4) < 2e-3


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3))
def test_delta_p_decreasing_in_p(seed, d):
    a = random_elliptic(np.random.default_rng(seed), d)
    vals = [delta_p(a, p) for p in (2.0, 2.5, 3.0, 4.0, 8.0)]
    assert all(x >= y - 1e-13 for x, y in zip(vals, vals[1:]))
    assert vals[0] <= lambda_min(a) + 1e-13


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.1, 10.0))
def test_constants_scale_with_matrix(seed, c):
    a = random_elliptic(np.random.default_rng(seed), 2)
    np.testing.assert_allclose(lambda_min(c * a), c * lambda_min(a), rtol=1e-11, atol=1e-13)
    np.testing.assert_allclose(lambda_max_norm(c * a), c * lambda_max_norm(a), rtol=1e-12)
    np.testing.assert_allclose(delta_p(c * a, 4), c * delta_p(a, 4), rtol=1e-10, atol=1e-13)


def test_c_p_and_delta_for_identity():
    eye = np.eye(2)
    np.testing.assert_allclose(c_p_constant(eye, eye, 4), 2.0, rtol=1e-14)
    np.testing.assert_allclose(delta_param(eye, eye, POWER4), 1 / 300, rtol=1e-13)


def test_c_p_and_delta_scaling():
    a, b = reference_random_pair()
    pair = make_pair("zygmund:3")
    p = pair.quantities.p
    np.testing.assert_allclose(c_p_constant(3 * a, 3 * b, p), c_p_constant(a, b, p) / 3, rtol=1e-11)
    np.testing.assert_allclose(delta_param(3 * a, 3 * b, pair), delta_param(a, b, pair), rtol=1e-11)


def test_delta_phi_for_power_equals_delta_p():
    a, _ = reference_random_pair()
    np.testing.assert_allclose(delta_phi(a, POWER4), delta_p(a, 4), atol=1e-12)


@pytest.mark.parametrize("name", ["zygmund:3", "power_sum:4,3,1", "dual_power_sum:1.5,1.8"])
def test_delta_phi_between_extreme_powers(name):
    pair = make_pair(name)
    q = pair.quantities
    a, _ = reference_random_pair()
    val = delta_phi(a, pair)
    assert val >= delta_p(a, q.p) - 1e-12
    assert val <= delta_p(a, q.m_tilde + 1) + 1e-12


def test_report_rows():
    rows = dict(ellipticity_report(np.eye(2), POWER4, np.eye(2)).rows())
    np.testing.assert_allclose(rows["delta_p"], 0.5, atol=1e-15)
    np.testing.assert_allclose(rows["c_p"], 2.0, rtol=1e-14)
    np.testing.assert_allclose(rows["delta"], 1 / 300, rtol=1e-13)


def test_non_elliptic_errors():
    bad = rotation(1.5, 2)
    with pytest.raises(NonEllipticError):
        c_p_constant(bad, np.eye(2), 4)
    with pytest.raises(NonEllipticError):
        delta_param(np.eye(2), bad, POWER4)


def test_p_below_two_rejected():
    with pytest.raises(ParameterError):
        delta_p(np.eye(2), 1.5)


@pytest.mark.parametrize("phi", [0.1, 0.5, 0.9])
def test_dissipativity_matches_power_condition(phi):
    rep = cm_dissipativity_check(rotation(phi, 2), POWER4)
    assert rep.details["power_case_max_diff"] <= 1e-10
    np.testing.assert_allclose(rep.min_margin, 2 * math.sqrt(3) * math.cos(phi) - 2 * math.sin(phi), atol=1e-12)


def test_dissipativity_threshold_agrees_with_ellipticity():
    # for e^{i phi} I and p = 4 both conditions change sign at phi = pi/3
    for offset, sign in ((-0.01, 1), (0.01, -1)):
        a = rotation(math.pi / 3 + offset, 2)
        assert sign * cm_dissipativity_check(a, POWER4).min_margin > 0
        assert sign * delta_p(a, 4) > 0


def test_dissipativity_needs_symmetric_imaginary_part():
    a = np.eye(2) + 1j * np.array([[0.0, 0.3], [-0.3, 0.0]])
    with pytest.raises(InapplicableError):
        cm_dissipativity_check(a, POWER4)


def test_variable_field_uses_worst_node():
    vals = np.stack([rotation(0.1, 1), rotation(0.6, 1), np.eye(1)])
    field = MatrixField(vals)
    np.testing.assert_allclose(lambda_min(field), math.cos(0.6), atol=1e-14)
    np.testing.assert_allclose(delta_p(field, 4), math.cos(0.6) - 0.5, atol=1e-14)
