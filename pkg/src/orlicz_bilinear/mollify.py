"""Mollification of the Bellman function by a smooth radial bump on C^2 = R^4.

The convolution integral is evaluated with a product rule in hyperspherical
coordinates ``x = r (cos(psi) e^{i t1}, sin(psi) e^{i t2})`` on the ball of
radius ``nu``: Gauss-Legendre in ``r`` and ``psi``, the trapezoid rule in the
two periodic angles.  Each quantity is computed at two orders and their
difference is reported as the quadrature tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from . import hessian as hz
from .bellman import (
    BellmanContext,
    _rng,
    profile,
    sample_directions,
    sample_points,
)
from .errors import ParameterError
from .reports import MarginReport


def bump(r):
    """Unnormalised bump ``exp(-1/(1 - r^2))`` on ``r < 1``, zero outside."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


@lru_cache(maxsize=None)
def bump_constant() -> float:
    """Normalising constant ``c`` with ``c * int_{R^4} bump = 1``."""
    radial, _ = integrate.quad(lambda r: r**3 * math.exp(-1.0 / (1.0 - r * r)), 0.0, 1.0, epsabs=0, epsrel=1e-13)
    return 1.0 / (2 * math.pi**2 * radial)


@lru_cache(maxsize=16)
def ball_rule(nu: float, n: int):
    """Offsets ``(w, z)`` and weights of the product rule on the radius-``nu`` ball.

    Weights include the bump density and are normalised to sum to one, which
    builds in the constant from :func:`bump_constant`.
    """
    if not 0 < nu <= 1:
        raise ParameterError("nu", nu, "nu in (0, 1]")
    x, wx = np.polynomial.legendre.leggauss(n)
    r = 0.5 * nu * (x + 1)
    wr = 0.5 * nu * wx
    psi = 0.25 * math.pi * (x + 1)
    wpsi = 0.25 * math.pi * wx
    theta = 2 * math.pi * np.arange(n) / n
    wt = np.full(n, 2 * math.pi / n)
    R, P, T1, T2 = np.meshgrid(r, psi, theta, theta + math.pi / n, indexing="ij")
    W = (
        wr[:, None, None, None]
        * wpsi[None, :, None, None]
        * wt[None, None, :, None]
        * wt[None, None, None, :]
        * R**3
        * np.cos(P)
        * np.sin(P)
        * bump(R / nu)
    )
    w = (R * np.cos(P) * np.exp(1j * T1)).ravel()
    z = (R * np.sin(P) * np.exp(1j * T2)).ravel()
    W = W.ravel()
    keep = W > 0
    W = W[keep] / W[keep].sum()
    return w[keep], z[keep], W


def second_moment(nu: float, n: int = 16) -> float:
    """Per-coordinate variance of the rescaled bump, ``int |x|^2 phi_nu / 4``."""
    w, z, W = ball_rule(nu, n)
    return float(np.sum(W * (np.abs(w) ** 2 + np.abs(z) ** 2)) / 4)


@dataclass
class Mollified:
    value: float
    du: complex
    dv: complex
    hess: np.ndarray
    tol_value: float
    tol_du: float
    tol_dv: float
    hess_low: np.ndarray

    @property
    def tol_hess(self) -> np.ndarray:
        return np.abs(self.hess - self.hess_low)


def _integrals(ctx: BellmanContext, u: complex, v: complex, nu: float, n: int):
    w, z, W = ball_rule(nu, n)
    uu = u - w
    vv = v - z
    a, b = np.abs(uu), np.abs(vv)
    p = profile(ctx, a, b)
    ok = (a > 0) & (b > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        du = np.where(a > 0, p.d1 * uu / np.where(a > 0, a, 1), 0) / 2
        dv = np.where(b > 0, p.d2 * vv / np.where(b > 0, b, 1), 0) / 2
    h = np.zeros(a.shape + (4, 4))
    if ok.any():
        h[ok] = hz.radial_hessian(uu[ok], vv[ok], p.d1[ok], p.d2[ok], p.d11[ok], p.d12[ok], p.d22[ok])
    return (
        float(W @ p.value),
        complex(W @ du),
        complex(W @ dv),
        np.einsum("k,kij->ij", W, h),
    )


def mollify_full(ctx: BellmanContext, u, v, nu: float, n: int = 16) -> Mollified:
    """Mollified value, complex gradient and 4x4 Hessian at one point, with tolerances.

    The gradient and Hessian are convolutions of the pointwise (almost
    everywhere defined) derivatives.
    """
    hi = _integrals(ctx, complex(u), complex(v), nu, n)
    lo = _integrals(ctx, complex(u), complex(v), nu, max(4, n // 2))
    return Mollified(
        hi[0], hi[1], hi[2], hi[3],
        abs(hi[0] - lo[0]), abs(hi[1] - lo[1]), abs(hi[2] - lo[2]), lo[3],
    )


def mollify(ctx: BellmanContext, nu: float, u, v, n: int = 16):
    """Mollified Bellman value and its quadrature tolerance."""
    m = mollify_full(ctx, u, v, nu, n)
    return m.value, m.tol_value


def verify_mollified(
    ctx: BellmanContext,
    nu: float = 0.05,
    samples: int = 100,
    seed: int = 0,
    n: int = 16,
    matrices=None,
):
    """Sampled margins of the three mollified estimates.

    Returns one report per estimate (value bound, gradient bounds, and one
    Hessian bound per matrix pair).  Each sample passes when its relative
    margin is at least minus its relative quadrature tolerance; the report
    carries the margin and tolerance of the tightest sample.
    """
    rng = _rng(seed, 51)
    u, v = sample_points(rng, samples)
    pairs = matrices or [(ctx.a, ctx.b, ctx.c_p)]
    dims = {a.dim for a, _, _ in pairs}
    dirs = {d: sample_directions(_rng(seed, 52 + d), samples, d) for d in dims}
    factor = ctx.quantities.upper_factor
    phi, psi = ctx.pair.phi, ctx.pair.psi
    coef0 = ctx.quantities.hessian_factor
    rows = {"value": [], "gradient": []}
    hess_rows = [[] for _ in pairs]
    for k in range(samples):
        m = mollify_full(ctx, u[k], v[k], nu, n)
        a, b = abs(u[k]), abs(v[k])
        bound = factor * float(phi(a + nu) + psi(b + nu))
        rows["value"].append(((bound - m.value) / bound, m.tol_value / bound, min(m.value, 0.0)))
        bu = max(float(phi.d1(a + nu)), b + nu)
        bv = float(psi.d1(b + nu))
        mu = ((bu - abs(m.du)) / bu, m.tol_du / bu)
        mv = ((bv - abs(m.dv)) / bv, m.tol_dv / bv)
        rows["gradient"].append(min(mu, mv, key=lambda t: t[0] + t[1]))
        for j, (amat, bmat, cp) in enumerate(pairs):
            zeta, eta = dirs[amat.dim]
            val = hz.generalized_hessian(m.hess, amat.constant, bmat.constant, zeta[k], eta[k])
            low = hz.generalized_hessian(m.hess_low, amat.constant, bmat.constant, zeta[k], eta[k])
            tol = val - low
            hb = coef0 / cp * np.linalg.norm(zeta[k]) * np.linalg.norm(eta[k])
            hess_rows[j].append(((val - hb) / hb, abs(tol) / hb))
    reports = []

    def report(name, entries):
        arr = np.array([e[:2] for e in entries])
        i = int(np.argmin(arr[:, 0] + arr[:, 1]))
        return MarginReport(
            name, samples, float(arr[i, 0]), {"u": complex(u[i]), "v": complex(v[i])}, float(arr[i, 1]),
            {"nu": nu, "nodes_per_axis": n, "worst_tolerance": float(arr[:, 1].max())},
        )

    label = ctx.pair.label
    rep = report(f"mollified_value[{label}]", rows["value"])
    rep.details["min_value"] = float(min(e[2] for e in rows["value"]))
    reports.append(rep)
    reports.append(report(f"mollified_gradient[{label}]", rows["gradient"]))
    for j, (amat, bmat, _) in enumerate(pairs):
        reports.append(report(f"mollified_hessian[{label};{amat.name},{bmat.name}]", hess_rows[j]))
    return reports


def taylor_check(ctx: BellmanContext, u, v, nu: float, n: int = 16):
    """Relative gap between the mollified value and its second-order expansion.

    Valid away from the coordinate planes and the critical curve, where the
    function is smooth on the whole ball.
    """
    from .bellman import bellman_eval, bellman_hessian

    value, tol = mollify(ctx, nu, u, v, n)
    base = float(bellman_eval(ctx, u, v))
    h = bellman_hessian(ctx, u, v)[0]
    approx = base + 0.5 * second_moment(nu, n) * float(np.trace(h))
    return abs(value - approx) / abs(approx), tol / abs(approx)
