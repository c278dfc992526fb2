import math

import numpy as np
import pytest

from orlicz_bilinear import BellmanContext, ParameterError, bellman_eval, make_pair, mollify, verify_mollified
from orlicz_bilinear.mollify import ball_rule, bump, bump_constant, mollify_full, second_moment, taylor_check

POWER4 = BellmanContext.build(make_pair("power:4"))


def test_bump_support_and_constant():
    np.testing.assert_array_equal(bump([1.0, 1.5]), 0.0)
    np.testing.assert_allclose(bump(0.0), math.exp(-1.0))
    # independent radial quadrature: fixed high-order Gauss-Legendre
    x, w = np.polynomial.legendre.leggauss(400)
    r = 0.5 * (x + 1)
    radial = 0.5 * np.sum(w * r**3 * bump(r))
    np.testing.assert_allclose(bump_constant(), 1 / (2 * math.pi**2 * radial), rtol=1e-10)


def test_ball_rule_is_normalised_and_supported():
    w, z, weights = ball_rule(0.3, 16)
    np.testing.assert_allclose(weights.sum(), 1.0, rtol=1e-14)
    assert np.all(weights > 0)
    assert np.all(np.abs(w) ** 2 + np.abs(z) ** 2 < 0.3**2)


def test_second_moment_scales_with_radius():
    np.testing.assert_allclose(second_moment(0.2), 4 * second_moment(0.1), rtol=1e-12)


def test_nu_range():
    for nu in (0.0, 1.5):
        with pytest.raises(ParameterError):
            mollify(POWER4, nu, 1.0, 1.0)


def test_value_at_origin_bound():
    nu = 0.05
    value, tol = mollify(POWER4, nu, 0.0, 0.0)
    q = POWER4.quantities
    bound = q.upper_factor * float(POWER4.pair.phi(nu) + POWER4.pair.psi(nu))
    assert 0 < value <= bound + tol


def test_small_radius_limit():
    for u, v in ((1.0, 3.0), (0.5, 0.1), (2.0, 2.0)):
        value, _ = mollify(POWER4, 1e-2, u, v)
        np.testing.assert_allclose(value, bellman_eval(POWER4, u, v), rtol=1e-2)


@pytest.mark.parametrize("name", ["zygmund:3", "dual_power_sum:1.5,1.8"])
def test_radial_symmetry(name):
    ctx = BellmanContext.build(make_pair(name))
    base, tol = mollify(ctx, 0.3, 1.0, 3.0)
    for theta, alpha in ((1.0, 2.0), (0.3, -1.2)):
        rotated, tol_r = mollify(ctx, 0.3, np.exp(1j * theta), 3.0 * np.exp(1j * alpha))
        assert abs(rotated - base) <= tol + tol_r


def test_taylor_expansion_far_from_singular_sets():
    gap, tol = taylor_check(POWER4, 1.0, 3.0, 0.05)
    assert gap <= 1e-3 + tol


def test_gradient_at_pole_is_finite_and_bounded():
    nu = 0.05
    m = mollify_full(POWER4, 0.0, 0.5, nu)
    assert abs(m.du) <= max(float(POWER4.pair.phi.d1(nu)), 0.5 + nu)
    assert abs(m.dv) <= float(POWER4.pair.psi.d1(0.5 + nu))


def test_verify_mollified_small_budget():
    reports = verify_mollified(POWER4, 0.05, samples=12, seed=1)
    assert len(reports) == 3
    for rep in reports:
        assert rep.passed, rep.to_dict()
