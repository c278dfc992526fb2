"""The Bellman function of a Young pair, its derivatives and sampled lemma checks.

The function depends on ``(u, v)`` only through ``a = |u|`` and ``b = |v|``;
the two-variable profile is split along the critical curve
``b = Phi'(a)`` into a lower branch (ties included) and an upper branch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import hessian as hz
from .ellipticity import MatrixField, as_field, c_p_constant, delta_param
from .errors import PoleError, UndefinedHessianError
from .reports import MarginReport
from .young import ConjugatePair

SAMPLE_RANGE = (1e-3, 1e3)
# relative distance to the critical curve below which samples count as "near"
NEAR_CURVE = 1e-6


@dataclass(eq=False)
class BellmanContext:
    """A Young pair, two matrices and the small parameter ``delta``."""

    pair: ConjugatePair
    a: MatrixField
    b: MatrixField
    delta: float
    delta_formula: float = field(default=float("nan"))

    @classmethod
    def build(cls, pair, a=None, b=None, *, delta=None, delta_scale=1.0, dim=1):
        a = as_field(np.eye(dim) if a is None else a, "A")
        b = as_field(np.eye(dim) if b is None else b, "B")
        formula = delta_param(a, b, pair)
        value = formula * delta_scale if delta is None else float(delta)
        return cls(pair, a, b, value, formula)

    @cached_property
    def quantities(self):
        return self.pair.quantities

    @cached_property
    def c_p(self) -> float:
        return c_p_constant(self.a, self.b, self.quantities.p)

    @property
    def hessian_coefficient(self) -> float:
        """Constant in front of ``|zeta||eta|`` in the Hessian lower bound."""
        return self.quantities.hessian_factor / self.c_p


@dataclass(frozen=True)
class RegionTag:
    lower: np.ndarray
    distance: np.ndarray  # Phi'(|u|) - |v|


def classify(u, v, pair: ConjugatePair) -> RegionTag:
    """Lower region (critical curve included) iff ``|v| <= Phi'(|u|)``."""
    a = np.abs(np.asarray(u))
    b = np.abs(np.asarray(v))
    dist = pair.phi.d1(a) - b
    return RegionTag(dist >= 0, dist)


@dataclass
class Profile:
    """Values and partials of the two-variable profile at ``(a, b)``."""

    value: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d11: np.ndarray
    d12: np.ndarray
    d22: np.ndarray
    lower: np.ndarray


def _lower_branch(ctx, a, phi_d, psi_d, i_a):
    dl = ctx.delta
    f, f1, f2 = phi_d
    g, g1, g2 = psi_d
    with np.errstate(divide="ignore", invalid="ignore"):
        value = (1 + dl) * (f + g) + dl * a * a * i_a
        d1 = (1 + 2 * dl) * f1 + 2 * dl * a * i_a
        d2 = (1 + dl) * g1
        d11 = (1 + 2 * dl) * f2 + 2 * dl * f1 / a + 2 * dl * i_a
        d12 = np.zeros_like(a)
        d22 = (1 + dl) * g2
    return value, d1, d2, d11, d12, d22


def _upper_branch(ctx, a, phi_d, psi_d, j_b):
    dl = ctx.delta
    f, f1, f2 = phi_d
    g, g1, g2 = psi_d
    with np.errstate(divide="ignore", invalid="ignore"):
        value = f + g + dl * a * a * j_b
        d1 = f1 + 2 * dl * a * j_b
        d2 = g1 + dl * a * a / g1
        d11 = f2 + 2 * dl * j_b
        d12 = 2 * dl * a / g1
        d22 = g2 * (1 - dl * a * a / g1**2)
    return value, d1, d2, d11, d12, d22


def profile(ctx: BellmanContext, a, b, *, branch: str | None = None) -> Profile:
    """Evaluate the profile and all partials.

    ``branch`` forces ``"lower"`` or ``"upper"`` regardless of the region,
    which is used to compare the two formulas on the critical curve.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    pair = ctx.pair
    phi_d = pair.phi.derivs(a)
    psi_d = pair.psi.derivs(b)
    if branch is None:
        lower = b <= phi_d[1]
    else:
        lower = np.full(a.shape, branch == "lower")
    out = [np.empty(a.shape) for _ in range(6)]
    if lower.any():
        m = lower
        vals = _lower_branch(ctx, a[m], [t[m] for t in phi_d], [t[m] for t in psi_d], pair.I(a[m]))
        for o, v in zip(out, vals):
            o[m] = v
    if (~lower).any():
        m = ~lower
        vals = _upper_branch(ctx, a[m], [t[m] for t in phi_d], [t[m] for t in psi_d], pair.J(b[m]))
        for o, v in zip(out, vals):
            o[m] = v
    return Profile(*out, lower)


def bellman_eval(ctx: BellmanContext, u, v):
    """Value of the Bellman function at complex ``(u, v)``."""
    u = np.asarray(u)
    p = profile(ctx, np.abs(u), np.abs(np.asarray(v)))
    return p.value.reshape(np.broadcast(u, np.asarray(v)).shape)


def _unit(z, r):
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(r > 0, z / np.where(r > 0, r, 1), 0)
    return out


def bellman_gradient(ctx: BellmanContext, u, v, *, strict: bool = True):
    """``(d/d conj(u), d/d conj(v))`` of the Bellman function.

    With ``strict`` a zero ``u`` or ``v`` raises :class:`PoleError`;
    otherwise the continuous extension (zero in the vanishing slot) is used.
    """
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    v = np.atleast_1d(np.asarray(v, dtype=complex))
    u, v = np.broadcast_arrays(u, v)
    a, b = np.abs(u), np.abs(v)
    if strict and (np.any(a == 0) or np.any(b == 0)):
        raise PoleError("gradient requested on a coordinate plane; it exists only as a limit")
    p = profile(ctx, a, b)
    d1 = np.where(a > 0, p.d1, 0.0)
    d2 = np.where(b > 0, p.d2, 0.0)
    return d1 * _unit(u, a) / 2, d2 * _unit(v, b) / 2


def real_gradient(ctx: BellmanContext, x):
    """Gradient in the real coordinates ``(u_r, u_i, v_r, v_i)``, shape ``(n, 4)``."""
    du, dv = bellman_gradient(ctx, *hz.from_real(np.asarray(x)), strict=False)
    return np.stack([2 * du.real, 2 * du.imag, 2 * dv.real, 2 * dv.imag], axis=-1)


def bellman_hessian(ctx: BellmanContext, u, v):
    """Analytic 4x4 real Hessian; undefined on the coordinate planes and the critical curve."""
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    v = np.atleast_1d(np.asarray(v, dtype=complex))
    u, v = np.broadcast_arrays(u, v)
    a, b = np.abs(u), np.abs(v)
    if np.any(a == 0) or np.any(b == 0):
        raise UndefinedHessianError("second derivatives do not exist on the coordinate planes")
    p = profile(ctx, a, b)
    on_curve = b == ctx.pair.phi.d1(a)
    if np.any(on_curve):
        raise UndefinedHessianError("second derivatives jump across the critical curve")
    return hz.radial_hessian(u, v, p.d1, p.d2, p.d11, p.d12, p.d22)


def hessian_ae(ctx: BellmanContext, u, v):
    """Hessian wherever it exists, zero on the (null) exceptional set."""
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    v = np.atleast_1d(np.asarray(v, dtype=complex))
    u, v = np.broadcast_arrays(u, v)
    a, b = np.abs(u), np.abs(v)
    ok = (a > 0) & (b > 0)
    h = np.zeros(a.shape + (4, 4))
    if ok.any():
        p = profile(ctx, a[ok], b[ok])
        h[ok] = hz.radial_hessian(u[ok], v[ok], p.d1, p.d2, p.d11, p.d12, p.d22)
    return h


def bellman_hessian_fd(ctx: BellmanContext, u, v, rel_step=1e-5):
    """Finite-difference Hessian from the analytic gradient."""
    return hz.fd_hessian_from_gradient(lambda x: real_gradient(ctx, x), hz.to_real(u, v), rel_step)


def shape_derivatives(ctx: BellmanContext, a, b, lower):
    """Derivatives of the radial building blocks of the active branch.

    Returns ``(P', P'', Q', Q'', R, R', R'')`` at ``(a, b)``; ``R`` vanishes in
    the lower branch.
    """
    pair, dl = ctx.pair, ctx.delta
    _, f1, f2 = pair.phi.derivs(a)
    _, g1, g2 = pair.psi.derivs(b)
    p1, p2 = f1.copy(), f2.copy()
    q1, q2 = g1.copy(), g2.copy()
    r0, r1, r2 = np.zeros_like(a), np.zeros_like(a), np.zeros_like(a)
    lo, up = lower, ~lower
    if lo.any():
        i_a = pair.I(a[lo])
        p1[lo] = (1 + 2 * dl) * f1[lo] + 2 * dl * a[lo] * i_a
        p2[lo] = (1 + 2 * dl) * f2[lo] + 2 * dl * i_a + 2 * dl * f1[lo] / a[lo]
        q1[lo] = (1 + dl) * g1[lo]
        q2[lo] = (1 + dl) * g2[lo]
    if up.any():
        r0[up] = dl * pair.J(b[up])
        r1[up] = dl / g1[up]
        r2[up] = -dl * g2[up] / g1[up] ** 2
    return p1, p2, q1, q2, r0, r1, r2


def hessian_tilde_closed_form(ctx: BellmanContext, u, v, zeta, eta, a_mat=None, b_mat=None):
    """Phase-rotated generalized Hessian of the Bellman function from the shape formulas."""
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    v = np.atleast_1d(np.asarray(v, dtype=complex))
    a_mat = ctx.a.constant if a_mat is None else a_mat
    b_mat = ctx.b.constant if b_mat is None else b_mat
    a, b = np.abs(u), np.abs(v)
    lower = classify(u, v, ctx.pair).lower
    p1, p2, q1, q2, r0, r1, r2 = shape_derivatives(ctx, a, b, lower)
    out = hz.closed_form_sum(a_mat, b_mat, a, b, p1, p2, q1, q2, zeta, eta)
    out = out + hz.closed_form_product(a_mat, b_mat, a, b, r0, r1, r2, zeta, eta)
    return out


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def sample_points(rng, n, lo=SAMPLE_RANGE[0], hi=SAMPLE_RANGE[1]):
    """Complex ``(u, v)`` with log-uniform moduli on ``[lo, hi]`` and uniform phases."""
    la, lb = math.log(lo), math.log(hi)
    mod = np.exp(rng.uniform(la, lb, size=(2, n)))
    ph = rng.uniform(0, 2 * math.pi, size=(2, n))
    z = mod * np.exp(1j * ph)
    return z[0], z[1]


def sample_directions(rng, n, d):
    """Uniform unit vectors in C^d scaled by log-uniform radii in [0.1, 10]."""
    z = rng.standard_normal((2, n, d)) + 1j * rng.standard_normal((2, n, d))
    z /= np.linalg.norm(z, axis=-1, keepdims=True)
    radii = np.exp(rng.uniform(math.log(0.1), math.log(10), size=(2, n, 1)))
    return z[0] * radii[0], z[1] * radii[1]


def _rng(seed, stream):
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, stream])


def _argmin_point(u, v, k):
    return {"u": complex(u[k]), "v": complex(v[k])}


def _chunks(n, size):
    for start in range(0, n, size):
        yield slice(start, min(n, start + size))


def verify_upper_bound(ctx: BellmanContext, samples=100_000, seed=0, tolerance=1e-9):
    """Relative margin of ``2 max{1, M/m_tilde} (Phi + Psi) - X``."""
    rng = _rng(seed, 42)
    u, v = sample_points(rng, samples)
    factor = ctx.quantities.upper_factor
    margins = np.empty(samples)
    for sl in _chunks(samples, 20_000):
        a, b = np.abs(u[sl]), np.abs(v[sl])
        bound = factor * (ctx.pair.phi(a) + ctx.pair.psi(b))
        margins[sl] = (bound - profile(ctx, a, b).value) / bound
    k = int(np.argmin(margins))
    return MarginReport(
        f"upper_bound[{ctx.pair.label}]", samples, float(margins[k]), _argmin_point(u, v, k), tolerance,
        {"factor": factor},
    )


def verify_gradient_bounds(ctx: BellmanContext, samples=100_000, seed=0, tolerance=1e-9):
    """Relative margins of the two pointwise gradient bounds."""
    rng = _rng(seed, 43)
    u, v = sample_points(rng, samples)
    mu = np.empty(samples)
    mv = np.empty(samples)
    for sl in _chunks(samples, 20_000):
        du, dv = bellman_gradient(ctx, u[sl], v[sl])
        a, b = np.abs(u[sl]), np.abs(v[sl])
        bu = np.maximum(ctx.pair.phi.d1(a), b)
        bv = ctx.pair.psi.d1(b)
        mu[sl] = (bu - np.abs(du)) / bu
        mv[sl] = (bv - np.abs(dv)) / bv
    both = np.minimum(mu, mv)
    k = int(np.argmin(both))
    return MarginReport(
        f"gradient_bounds[{ctx.pair.label}]", samples, float(both[k]), _argmin_point(u, v, k), tolerance,
        {"min_margin_u": float(mu.min()), "min_margin_v": float(mv.min()), "delta": ctx.delta},
    )


def verify_hessian_lower(ctx: BellmanContext, samples=100_000, seed=0, tolerance=1e-6):
    """Relative margin of the generalized Hessian over its lower bound.

    The margin is ``(H - c|zeta||eta|) / (c|zeta||eta|)``.  Samples within
    relative distance ``NEAR_CURVE`` of the critical curve are summarised
    separately in ``details``.
    """
    rng = _rng(seed, 44)
    u, v = sample_points(rng, samples)
    zeta, eta = sample_directions(rng, samples, ctx.a.dim)
    coef = ctx.hessian_coefficient
    margins = np.empty(samples)
    for sl in _chunks(samples, 20_000):
        h = bellman_hessian(ctx, u[sl], v[sl])
        val = hz.generalized_hessian(h, ctx.a.constant, ctx.b.constant, zeta[sl], eta[sl])
        bound = coef * np.linalg.norm(zeta[sl], axis=1) * np.linalg.norm(eta[sl], axis=1)
        margins[sl] = (val - bound) / bound
    dist = np.abs(classify(u, v, ctx.pair).distance) / np.maximum(ctx.pair.phi.d1(np.abs(u)), np.abs(v))
    near = dist < NEAR_CURVE
    far = ~near
    k = int(np.flatnonzero(far)[np.argmin(margins[far])]) if far.any() else 0
    details = {"coefficient": coef, "near_curve_samples": int(near.sum())}
    if near.any():
        details["near_curve_min_margin"] = float(margins[near].min())
    return MarginReport(
        f"hessian_lower[{ctx.pair.label}]", int(far.sum()), float(margins[k]), _argmin_point(u, v, k), tolerance,
        details,
    )
