import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orlicz_bilinear import (
    BellmanContext,
    PoleError,
    UndefinedHessianError,
    bellman_eval,
    bellman_gradient,
    bellman_hessian,
    make_pair,
    verify_gradient_bounds,
    verify_hessian_lower,
    verify_upper_bound,
)
from orlicz_bilinear import hessian as hz
from orlicz_bilinear.acceptance import branch_gap, critical_curve_points, hessian_agreement, off_curve_points
from orlicz_bilinear.bellman import _rng, classify, profile
from orlicz_bilinear.config import REFERENCE_FAMILIES, reference_random_pair, rotation
from orlicz_bilinear.oracles import power_bellman

CONTEXTS = {name: BellmanContext.build(make_pair(name)) for name in REFERENCE_FAMILIES}


def test_classify_examples():
    pair = make_pair("power:4")
    # Phi'(1) = 1: the curve itself belongs to the lower region
    tag = classify([1.0, 1.0, 1.0, 2.0], [0.5, 1.0, 1.5, 7.9], pair)
    np.testing.assert_array_equal(tag.lower, [True, True, False, True])


def test_value_at_origin():
    for ctx in CONTEXTS.values():
        assert float(bellman_eval(ctx, 0.0, 0.0)) == 0.0


def test_delta_for_identity_power():
    ctx = CONTEXTS["power:4"]
    np.testing.assert_allclose(ctx.delta, 1 / 300, rtol=1e-13)
    np.testing.assert_allclose(ctx.c_p, 2.0, rtol=1e-14)
    np.testing.assert_allclose(ctx.hessian_coefficient, 0.05, rtol=1e-13)


@pytest.mark.parametrize("p", [3.0, 4.0, 6.0])
def test_power_law_closed_form(p):
    ctx = BellmanContext.build(make_pair(f"power:{p:g}"))
    u, v = off_curve_points(ctx.pair, _rng(0, 1), 2000, gap=0.0)
    np.testing.assert_allclose(bellman_eval(ctx, u, v), power_bellman(p, ctx.delta, u, v), rtol=1e-11)


@pytest.mark.parametrize("name", REFERENCE_FAMILIES)
def test_branch_continuity(name):
    ctx = CONTEXTS[name]
    a, b = critical_curve_points(ctx.pair, np.random.default_rng(3), 500)
    assert branch_gap(ctx, a, b).max() <= 1e-8


@settings(max_examples=50, deadline=None)
@given(
    st.sampled_from(REFERENCE_FAMILIES),
    st.floats(1e-3, 1e3),
    st.floats(1e-3, 1e3),
    st.floats(0, 2 * math.pi),
    st.floats(0, 2 * math.pi),
)
def test_phase_invariance(name, a, b, theta, alpha):
    ctx = CONTEXTS[name]
    u, v = a * np.exp(1j * theta), b * np.exp(1j * alpha)
    # only the moduli enter; the tolerance absorbs rounding in |u|
    np.testing.assert_allclose(bellman_eval(ctx, u, v), bellman_eval(ctx, a, b), rtol=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(REFERENCE_FAMILIES), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_value_is_nonnegative_and_above_young_sum(name, a, b):
    ctx = CONTEXTS[name]
    val = float(bellman_eval(ctx, a, b))
    assert val >= (ctx.pair.phi(a) + ctx.pair.psi(b)) * (1 - 1e-12)


@pytest.mark.parametrize("name", REFERENCE_FAMILIES)
def test_gradient_matches_finite_differences(name):
    ctx = CONTEXTS[name]
    u, v = off_curve_points(ctx.pair, _rng(1, 2), 1000)
    x = hz.to_real(u, v)
    fd = hz.fd_gradient(lambda y: bellman_eval(ctx, *hz.from_real(y)), x, rel_step=1e-6)
    du, dv = bellman_gradient(ctx, u, v)
    analytic = np.stack([2 * du.real, 2 * du.imag, 2 * dv.real, 2 * dv.imag], axis=-1)
    scale = np.linalg.norm(analytic, axis=1, keepdims=True)
    assert np.max(np.abs(fd - analytic) / scale) <= 1e-5


def test_gradient_pole():
    ctx = CONTEXTS["power:4"]
    with pytest.raises(PoleError):
        bellman_gradient(ctx, 0.0, 1.0)
    du, dv = bellman_gradient(ctx, [0.0], [1.0], strict=False)
    assert du[0] == 0.0 and abs(dv[0]) > 0


def test_lower_branch_has_no_mixed_partial():
    ctx = CONTEXTS["zygmund:3"]
    p = profile(ctx, np.array([1.0, 2.0]), np.array([0.1, 0.2]))
    assert p.lower.all()
    np.testing.assert_array_equal(p.d12, 0.0)


def test_power_upper_branch_second_partial():
    # upper branch of the quartic pair: Psi''(b) (1 - delta a^2 / b^{2/3})
    ctx = CONTEXTS["power:4"]
    a, b = 1.0, 8.0
    p = profile(ctx, a, b)
    assert not p.lower.any()
    psi2 = (1 / 3) * b ** (-2 / 3)
    np.testing.assert_allclose(p.d22, psi2 * (1 - ctx.delta * a * a / b ** (2 / 3)), rtol=1e-12)


def test_hessian_undefined_sets():
    ctx = CONTEXTS["power:4"]
    with pytest.raises(UndefinedHessianError):
        bellman_hessian(ctx, 0.0, 1.0)
    with pytest.raises(UndefinedHessianError):
        bellman_hessian(ctx, 1.0, 1.0)


@pytest.mark.parametrize("name", REFERENCE_FAMILIES)
def test_hessian_closed_form_and_finite_differences(name):
    closed, fd = hessian_agreement(name, seed=5, n=300)
    assert closed.min_margin >= 0, closed
    assert fd.min_margin >= 0, fd


@pytest.mark.parametrize("name", REFERENCE_FAMILIES)
def test_lemma_margins_small_budget(name):
    a, b = reference_random_pair()
    for ctx in (CONTEXTS[name], BellmanContext.build(make_pair(name), a, b)):
        for rep in (
            verify_upper_bound(ctx, 2000, seed=3),
            verify_gradient_bounds(ctx, 2000, seed=3),
            verify_hessian_lower(ctx, 2000, seed=3),
        ):
            assert rep.passed, rep.to_dict()


def test_rotated_pair_hessian_margin():
    pair = make_pair("power:4")
    ctx = BellmanContext.build(pair, rotation(0.4, 1), rotation(-0.4, 1))
    assert verify_hessian_lower(ctx, 5000, seed=8).passed


def test_hessian_report_is_reproducible():
    ctx = CONTEXTS["zygmund:3"]
    r1 = verify_hessian_lower(ctx, 500, seed=9)
    r2 = verify_hessian_lower(ctx, 500, seed=9)
    assert r1.to_dict() == r2.to_dict()


def test_delta_scale():
    pair = make_pair("power:4")
    ctx = BellmanContext.build(pair, delta_scale=10.0)
    np.testing.assert_allclose(ctx.delta, 10 * ctx.delta_formula, rtol=1e-15)
