import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orlicz_bilinear import PoleError
from orlicz_bilinear import hessian as hz
from orlicz_bilinear.acceptance import shape_examples
from orlicz_bilinear.bellman import sample_directions, sample_points
from orlicz_bilinear.config import random_elliptic, reference_random_pair


def _setup(seed, n=50, d=2):
    rng = np.random.default_rng(seed)
    u, v = sample_points(rng, n, 0.1, 10.0)
    zeta, eta = sample_directions(rng, n, d)
    return rng, u, v, zeta, eta


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3))
def test_modulus_squared_gives_real_part_of_form(seed, d):
    rng, u, v, zeta, eta = _setup(seed, d=d)
    a = random_elliptic(rng, d)
    b = random_elliptic(rng, d)
    n = u.size
    h = hz.product_shape_hessian(u, v, np.ones(n), np.zeros(n), np.zeros(n))
    expected = 2 * np.real(np.einsum("ni,ni->n", zeta @ a.T, zeta.conj()))
    np.testing.assert_allclose(hz.generalized_hessian(h, a, b, zeta, eta), expected, rtol=1e-12, atol=1e-12)
    h_radial = hz.radial_hessian(u, v, 2 * np.abs(u), 0.0, 2.0, 0.0, 0.0)
    np.testing.assert_allclose(h_radial, h, atol=1e-12)


def test_linear_function_has_zero_form():
    _, u, v, zeta, eta = _setup(1)
    a, b = reference_random_pair()
    h = np.zeros((u.size, 4, 4))
    np.testing.assert_array_equal(hz.generalized_hessian(h, a, b, zeta, eta), 0.0)


def test_single_point_matches_batch():
    _, u, v, zeta, eta = _setup(2, n=3)
    a, b = reference_random_pair()
    h = hz.radial_hessian(u, v, 1.0, 2.0, 3.0, 0.5, 4.0)
    batch = hz.generalized_hessian(h, a, b, zeta, eta)
    for k in range(3):
        np.testing.assert_allclose(hz.generalized_hessian(h[k], a, b, zeta[k], eta[k]), batch[k], rtol=1e-14)


def test_phase_rotation_identity():
    _, u, v, zeta, eta = _setup(3)
    a, b = reference_random_pair()
    h = hz.radial_hessian(u, v, 1.0, 2.0, 3.0, 0.5, 4.0)
    pu, pv = u / np.abs(u), v / np.abs(v)
    direct = hz.generalized_hessian(h, a, b, zeta * pu[:, None], eta * pv[:, None])
    np.testing.assert_allclose(hz.hessian_tilde(h, a, b, u, v, zeta, eta), direct, rtol=1e-14)


def test_radial_hessian_matches_finite_differences():
    # F(a, b) = a^3 b + b^2 on C^2
    _, u, v, _, _ = _setup(4, n=20)
    a, b = np.abs(u), np.abs(v)

    def grad(x):
        uu, vv = hz.from_real(x)
        aa, bb = np.abs(uu), np.abs(vv)
        d1 = 3 * aa**2 * bb
        d2 = aa**3 + 2 * bb
        return np.stack([d1 * uu.real / aa, d1 * uu.imag / aa, d2 * vv.real / bb, d2 * vv.imag / bb], axis=-1)

    h = hz.radial_hessian(u, v, 3 * a**2 * b, a**3 + 2 * b, 6 * a * b, 3 * a**2, 2.0)
    fd = hz.fd_hessian_from_gradient(grad, hz.to_real(u, v))
    np.testing.assert_allclose(h, fd, rtol=1e-6, atol=1e-6 * np.abs(h).max())


def test_fd_gradient_of_quadratic():
    x = np.random.default_rng(5).standard_normal((10, 4))
    q = np.diag([1.0, 2.0, 3.0, 4.0])
    g = hz.fd_gradient(lambda y: np.einsum("ni,ij,nj->n", y, q, y), x)
    np.testing.assert_allclose(g, 2 * x @ q, rtol=1e-8, atol=1e-8)


def test_closed_forms_match_assembly():
    for rep in shape_examples(seed=11, n=500):
        assert rep.passed, rep


def test_closed_form_sum_on_identity():
    # with A = B = I the sum shape reduces to a weighted sum of |Re|^2 and |Im|^2 parts
    _, u, v, zeta, eta = _setup(6, n=10, d=1)
    a, b = np.abs(u), np.abs(v)
    eye = np.eye(1)
    h = hz.sum_shape_hessian(u, v, 2 * a, 6.0 * np.ones_like(a), 3 * b, 1.0 * np.ones_like(b))
    got = hz.hessian_tilde(h, eye, eye, u, v, zeta, eta)
    ref = hz.closed_form_sum(eye, eye, a, b, 2 * a, 6.0, 3 * b, 1.0, zeta, eta)
    np.testing.assert_allclose(got, ref, rtol=1e-12)
    z, e = zeta[:, 0], eta[:, 0]
    manual = 6 * z.real**2 + 2 * z.imag**2 + 1 * e.real**2 + 3 * e.imag**2
    np.testing.assert_allclose(ref, manual, rtol=1e-12)


def test_poles():
    with pytest.raises(PoleError):
        hz.radial_hessian([0.0], [1.0], 1, 1, 1, 0, 1)
    with pytest.raises(PoleError):
        hz.product_shape_hessian([1.0], [0.0], 1, 1, 1)
    with pytest.raises(PoleError):
        hz.hessian_tilde(np.zeros((1, 4, 4)), np.eye(1), np.eye(1), [0.0], [1.0], [[1.0]], [[1.0]])


def test_product_shape_defined_at_u_zero():
    h = hz.product_shape_hessian([0.0], [2.0], 3.0, 1.0, 1.0)
    np.testing.assert_allclose(h[0, :2, :2], 6 * np.eye(2))
    np.testing.assert_allclose(h[0, 2:, 2:], 0.0)


def test_pairing_scale_bounds_value():
    _, u, v, zeta, eta = _setup(7)
    a, b = reference_random_pair()
    h = hz.radial_hessian(u, v, 1.0, -2.0, 3.0, 0.5, -4.0)
    val = hz.generalized_hessian(h, a, b, zeta, eta)
    assert np.all(np.abs(val) <= hz.pairing_scale(h, a, b, zeta, eta) * (1 + 1e-12))
