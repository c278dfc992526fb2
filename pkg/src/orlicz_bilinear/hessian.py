"""Generalized Hessians of functions on C^2 paired with complex matrices.

Points ``(u, v)`` are complex and identified with real 4-vectors
``(u_r, u_i, v_r, v_i)``.  Directions ``zeta, eta`` are complex d-vectors.
Everything is vectorised over a leading sample axis.
"""
from __future__ import annotations

import numpy as np

from .errors import PoleError


def _mat(a, n):
    a = np.asarray(a, dtype=complex)
    return np.broadcast_to(a, (n,) + a.shape[-2:]) if a.ndim == 2 else a


def generalized_hessian(hess, a, b, zeta, eta):
    """Pair ``(Hess (x) I_d) X`` with the block Re/Im image of ``X`` under ``diag(A, B)``.

    ``hess`` has shape ``(n, 4, 4)`` (or ``(4, 4)``), ``zeta, eta`` shape
    ``(n, d)`` (or ``(d,)``), ``a, b`` shape ``(d, d)`` or ``(n, d, d)``.
    """
    hess = np.asarray(hess, dtype=float)
    single = hess.ndim == 2
    hess = np.atleast_3d(hess) if not single else hess[None]
    zeta = np.atleast_2d(np.asarray(zeta, dtype=complex))
    eta = np.atleast_2d(np.asarray(eta, dtype=complex))
    n = max(hess.shape[0], zeta.shape[0], eta.shape[0])
    zeta = np.broadcast_to(zeta, (n, zeta.shape[-1]))
    eta = np.broadcast_to(eta, (n, eta.shape[-1]))
    hess = np.broadcast_to(hess, (n, 4, 4))
    a_z = np.einsum("nij,nj->ni", _mat(a, n), zeta)
    b_e = np.einsum("nij,nj->ni", _mat(b, n), eta)
    x = np.stack([zeta.real, zeta.imag, eta.real, eta.imag], axis=1)
    y = np.einsum("nkl,nld->nkd", hess, x)
    z = np.stack([a_z.real, a_z.imag, b_e.real, b_e.imag], axis=1)
    out = np.einsum("nkd,nkd->n", y, z)
    return out[0] if single else out


def pairing_scale(hess, a, b, zeta, eta):
    """The generalized Hessian with every factor replaced by its modulus.

    Bounds the size of the individual terms, so it is the natural
    denominator for relative comparisons of values that may cancel.
    """
    hess = np.abs(np.asarray(hess, dtype=float))
    zeta = np.asarray(zeta, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    n = hess.shape[0] if hess.ndim == 3 else 1
    az = np.abs(np.einsum("nij,nj->ni", np.abs(_mat(a, n)), np.abs(np.atleast_2d(zeta))))
    be = np.abs(np.einsum("nij,nj->ni", np.abs(_mat(b, n)), np.abs(np.atleast_2d(eta))))
    x = np.concatenate([np.abs(np.atleast_2d(zeta))] * 2 + [np.abs(np.atleast_2d(eta))] * 2, axis=-1)
    z = np.concatenate([az, az, be, be], axis=-1)
    d = zeta.shape[-1]
    blocks = np.kron(hess if hess.ndim == 3 else hess[None], np.eye(d))
    out = np.einsum("nk,nkl,nl->n", z, blocks, x)
    return out if hess.ndim == 3 else out[0]


def _phases(u, v):
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if np.any(u == 0) or np.any(v == 0):
        raise PoleError("phase substitution needs u != 0 and v != 0")
    return u / np.abs(u), v / np.abs(v)


def hessian_tilde(hess, a, b, u, v, zeta, eta):
    """Generalized Hessian with directions rotated by the phases of ``u`` and ``v``."""
    pu, pv = _phases(u, v)
    zeta = np.asarray(zeta, dtype=complex) * np.asarray(pu)[..., None]
    eta = np.asarray(eta, dtype=complex) * np.asarray(pv)[..., None]
    return generalized_hessian(hess, a, b, zeta, eta)


def radial_hessian(u, v, b1, b2, b11, b12, b22):
    """4x4 real Hessian of ``(u, v) -> F(|u|, |v|)`` from the partials of F.

    Requires ``u != 0`` and ``v != 0``.  The output has shape ``(n, 4, 4)``.
    """
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    v = np.atleast_1d(np.asarray(v, dtype=complex))
    a, b = np.abs(u), np.abs(v)
    if np.any(a == 0) or np.any(b == 0):
        raise PoleError("Hessian of a radial function is singular on the coordinate planes")
    ur, ui, vr, vi = u.real, u.imag, v.real, v.imag
    b1, b2, b11, b12, b22 = (np.broadcast_to(np.asarray(t, float), a.shape) for t in (b1, b2, b11, b12, b22))
    h = np.empty(a.shape + (4, 4))
    a2, a3 = a * a, a**3
    h[:, 0, 0] = b11 * ur**2 / a2 + b1 * ui**2 / a3
    h[:, 1, 1] = b11 * ui**2 / a2 + b1 * ur**2 / a3
    h[:, 0, 1] = h[:, 1, 0] = (b11 - b1 / a) * ur * ui / a2
    bb2, bb3 = b * b, b**3
    h[:, 2, 2] = b22 * vr**2 / bb2 + b2 * vi**2 / bb3
    h[:, 3, 3] = b22 * vi**2 / bb2 + b2 * vr**2 / bb3
    h[:, 2, 3] = h[:, 3, 2] = (b22 - b2 / b) * vr * vi / bb2
    mix = b12 / (a * b)
    h[:, 0, 2] = h[:, 2, 0] = mix * ur * vr
    h[:, 0, 3] = h[:, 3, 0] = mix * ur * vi
    h[:, 1, 2] = h[:, 2, 1] = mix * ui * vr
    h[:, 1, 3] = h[:, 3, 1] = mix * ui * vi
    return h


def sum_shape_hessian(u, v, p1, p2, q1, q2):
    """Hessian of ``P(|u|) + Q(|v|)`` given ``P', P'', Q', Q''`` at ``|u|, |v|``."""
    return radial_hessian(u, v, p1, q1, p2, 0.0, q2)


def product_shape_hessian(u, v, r0, r1, r2):
    """Hessian of ``|u|^2 R(|v|)`` given ``R, R', R''`` at ``|v|``.

    Written out directly in Cartesian form, so it is valid at ``u = 0``.
    """
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    v = np.atleast_1d(np.asarray(v, dtype=complex))
    b = np.abs(v)
    if np.any(b == 0):
        raise PoleError("Hessian of |u|^2 R(|v|) is singular at v = 0")
    ur, ui, vr, vi = u.real, u.imag, v.real, v.imag
    r0, r1, r2 = (np.broadcast_to(np.asarray(t, float), b.shape) for t in (r0, r1, r2))
    a2 = ur**2 + ui**2
    h = np.zeros(b.shape + (4, 4))
    h[:, 0, 0] = h[:, 1, 1] = 2 * r0
    h[:, 0, 2] = h[:, 2, 0] = 2 * ur * r1 * vr / b
    h[:, 0, 3] = h[:, 3, 0] = 2 * ur * r1 * vi / b
    h[:, 1, 2] = h[:, 2, 1] = 2 * ui * r1 * vr / b
    h[:, 1, 3] = h[:, 3, 1] = 2 * ui * r1 * vi / b
    h[:, 2, 2] = a2 * (r2 * vr**2 / b**2 + r1 / b * vi**2 / b**2)
    h[:, 3, 3] = a2 * (r1 / b * vr**2 / b**2 + r2 * vi**2 / b**2)
    h[:, 2, 3] = h[:, 3, 2] = a2 * (r2 - r1 / b) * vr * vi / b**2
    return h


def _inner(x, y):
    """``<x, y> = sum x * conj(y)`` along the last axis."""
    return np.sum(x * np.conj(y), axis=-1)


def _apply(a, x):
    a = np.asarray(a, dtype=complex)
    if a.ndim == 2:
        return x @ a.T
    return np.einsum("nij,nj->ni", a, x)


def closed_form_sum(a, b, ua, vb, p1, p2, q1, q2, zeta, eta):
    """Phase-rotated generalized Hessian of ``P(|u|) + Q(|v|)`` in closed form.

    ``ua, vb`` are ``|u|, |v|``; the derivative arguments are the values of
    ``P', P'', Q', Q''`` there.
    """
    zeta = np.asarray(zeta, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    pp = (np.asarray(p2) + np.asarray(p1) / ua)[..., None] / 2
    pm = (np.asarray(p2) - np.asarray(p1) / ua)[..., None] / 2
    qp = (np.asarray(q2) + np.asarray(q1) / vb)[..., None] / 2
    qm = (np.asarray(q2) - np.asarray(q1) / vb)[..., None] / 2
    first = _inner(_apply(a, zeta), pp * zeta + pm * np.conj(zeta)).real
    second = _inner(_apply(b, eta), qp * eta + qm * np.conj(eta)).real
    return first + second


def closed_form_product(a, b, ua, vb, r0, r1, r2, zeta, eta):
    """Phase-rotated generalized Hessian of ``|u|^2 R(|v|)`` in closed form."""
    zeta = np.asarray(zeta, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    ua = np.asarray(ua, dtype=float)[..., None]
    vb = np.asarray(vb, dtype=float)[..., None]
    r0, r1, r2 = (np.asarray(t, dtype=float)[..., None] for t in (r0, r1, r2))
    first = _inner(_apply(a, zeta), 2 * r0 * zeta + 2 * ua * r1 * eta.real).real
    second = _inner(
        _apply(b, eta),
        2 * ua * r1 * zeta.real + ua**2 * r2 * eta.real + 1j * ua**2 * r1 / vb * eta.imag,
    ).real
    return first + second


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------


def to_real(u, v):
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    return np.stack([u.real, u.imag, v.real, v.imag], axis=-1)


def from_real(x):
    return x[..., 0] + 1j * x[..., 1], x[..., 2] + 1j * x[..., 3]


def fd_gradient(func, x, rel_step=1e-6):
    """Central-difference gradient of ``func: (n, 4) -> (n,)`` at ``x``.

    The step in each coordinate is ``rel_step * max(|x_k|, 1)``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    g = np.empty_like(x)
    for k in range(x.shape[1]):
        h = rel_step * np.maximum(np.abs(x[:, k]), 1.0)
        xp, xm = x.copy(), x.copy()
        xp[:, k] += h
        xm[:, k] -= h
        g[:, k] = (func(xp) - func(xm)) / (2 * h)
    return g


def fd_hessian_from_gradient(grad, x, rel_step=1e-5):
    """Central differences of an analytic gradient ``grad: (n, 4) -> (n, 4)``.

    The step in a u-coordinate is ``rel_step * |u|`` (likewise for v), so a
    perturbation never reaches a coordinate plane; the result is
    symmetrised.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    slot = [np.hypot(x[:, 0], x[:, 1]), np.hypot(x[:, 2], x[:, 3])]
    out = np.empty(x.shape + (4,))
    for k in range(4):
        h = rel_step * np.maximum(slot[k // 2], 1e-300)
        xp, xm = x.copy(), x.copy()
        xp[:, k] += h
        xm[:, k] -= h
        out[:, k, :] = (grad(xp) - grad(xm)) / (2 * h)[:, None]
    return 0.5 * (out + np.swapaxes(out, 1, 2))
