"""Young functions, their conjugates and the scalar quantities built from them.

A :class:`YoungFunction` bundles vectorised evaluators for a convex function
and its first two derivatives.  Built-in families carry closed forms; the
complementary function of anything without a closed-form conjugate is built
numerically by inverting the derivative.

All evaluators accept scalars or numpy arrays and return arrays of the same
shape.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping

import numpy as np
from scipy import integrate, optimize

from .errors import (
    DomainLimitError,
    InvalidYoungPairError,
    ParameterError,
    QuadratureError,
)

ArrayFn = Callable[[np.ndarray], np.ndarray]

SCAN_WINDOW = (1e-6, 1e6)
SCAN_POINTS = 10_000
# how far (in decades) a boundary extremum may be chased outwards
_EXTENSION_DECADES = 6
_MAX_EXTENSIONS = 8

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
_GL_LOW_NODES, _GL_LOW_WEIGHTS = np.polynomial.legendre.leggauss(5)


def _as_array(s):
    return np.asarray(s, dtype=float)


@dataclass(frozen=True, eq=False)
class YoungFunction:
    """A Young function on [0, inf) with evaluators for value, first and second derivative.

    ``side`` is ``"phi"`` for functions behaving like powers above 2 and
    ``"psi"`` for their complements (powers in (1, 2)).
    """

    family: str
    params: Mapping[str, float]
    side: str
    eval: ArrayFn
    d1: ArrayFn
    d2: ArrayFn
    # closed forms for int_0^t Y'(s)/s^2 ds and int_0^t ds/Y'(s), when known
    closed_i: ArrayFn | None = None
    closed_j: ArrayFn | None = None
    conjugate_of: "YoungFunction | None" = None
    # returns (Y, Y', Y'') sharing any expensive intermediate work
    _derivs: Callable | None = field(default=None, repr=False)

    def __call__(self, s):
        return self.eval(s)

    def derivs(self, s):
        """Return ``(Y(s), Y'(s), Y''(s))``."""
        if self._derivs is not None:
            return self._derivs(s)
        return self.eval(s), self.d1(s), self.d2(s)

    @property
    def supports_closed_integrals(self) -> bool:
        return self.closed_i is not None or self.closed_j is not None

    @property
    def label(self) -> str:
        if self.conjugate_of is not None:
            return f"conj({self.conjugate_of.label})"
        args = ",".join(f"{v:g}" for v in self.params.values())
        return f"{self.family}({args})"

    def spec(self) -> dict:
        if self.conjugate_of is not None:
            raise ValueError("numeric conjugates have no serialisable family record")
        return {"family": self.family, **{k: float(v) for k, v in self.params.items()}}

    def __repr__(self):
        return f"YoungFunction({self.label}, side={self.side})"


# ---------------------------------------------------------------------------
# Built-in families
# ---------------------------------------------------------------------------


def power_law(p: float, *, allow_dual: bool = False) -> YoungFunction:
    """``s**p / p``.  With ``allow_dual`` the range (1, 2) is accepted too."""
    p = float(p)
    if allow_dual:
        if not (p > 1 and p != 2):
            raise ParameterError("p", p, "p in (1,2) or (2,inf)")
    elif not p > 2:
        raise ParameterError("p", p, "p in (2, inf)")
    side = "phi" if p > 2 else "psi"

    def ev(s):
        s = _as_array(s)
        return s**p / p

    def d1(s):
        s = _as_array(s)
        return s ** (p - 1)

    def d2(s):
        s = _as_array(s)
        with np.errstate(divide="ignore"):
            return (p - 1) * s ** (p - 2)

    closed_i = closed_j = None
    if p > 2:

        def closed_i(t):
            t = _as_array(t)
            return t ** (p - 2) / (p - 2)

    else:

        def closed_j(t):
            t = _as_array(t)
            return t ** (2 - p) / (2 - p)

    return YoungFunction("power", {"p": p}, side, ev, d1, d2, closed_i, closed_j)


def zygmund_log(r: float) -> YoungFunction:
    """``s**r * log(s + e)``."""
    r = float(r)
    if not r > 2:
        raise ParameterError("r", r, "r in (2, inf)")
    e = math.e

    def ev(s):
        s = _as_array(s)
        return s**r * np.log(s + e)

    def d1(s):
        s = _as_array(s)
        return r * s ** (r - 1) * np.log(s + e) + s**r / (s + e)

    def d2(s):
        s = _as_array(s)
        return (
            r * (r - 1) * s ** (r - 2) * np.log(s + e)
            + 2 * r * s ** (r - 1) / (s + e)
            - s**r / (s + e) ** 2
        )

    return YoungFunction("zygmund", {"r": r}, "phi", ev, d1, d2)


def power_sum(p: float, r: float, eps: float = 1.0) -> YoungFunction:
    """``s**p + eps * s**r`` with ``2 < r < p``."""
    p, r, eps = float(p), float(r), float(eps)
    if not r > 2:
        raise ParameterError("r", r, "2 < r")
    if not r < p:
        raise ParameterError("p", p, "r < p < inf")
    if not 0 < eps <= 1:
        raise ParameterError("eps", eps, "eps in (0, 1]")

    def ev(s):
        s = _as_array(s)
        return s**p + eps * s**r

    def d1(s):
        s = _as_array(s)
        return p * s ** (p - 1) + eps * r * s ** (r - 1)

    def d2(s):
        s = _as_array(s)
        return p * (p - 1) * s ** (p - 2) + eps * r * (r - 1) * s ** (r - 2)

    def closed_i(t):
        t = _as_array(t)
        return p * t ** (p - 2) / (p - 2) + eps * r * t ** (r - 2) / (r - 2)

    return YoungFunction("power_sum", {"p": p, "r": r, "eps": eps}, "phi", ev, d1, d2, closed_i)


def dual_power_sum(q: float, r: float) -> YoungFunction:
    """``t**q + t**r`` with ``1 < q < r < 2``; this is the complementary-side function."""
    q, r = float(q), float(r)
    if not q > 1:
        raise ParameterError("q", q, "1 < q")
    if not q < r:
        raise ParameterError("r", r, "q < r")
    if not r < 2:
        raise ParameterError("r", r, "r < 2")

    def ev(t):
        t = _as_array(t)
        return t**q + t**r

    def d1(t):
        t = _as_array(t)
        return q * t ** (q - 1) + r * t ** (r - 1)

    def d2(t):
        t = _as_array(t)
        with np.errstate(divide="ignore"):
            return q * (q - 1) * t ** (q - 2) + r * (r - 1) * t ** (r - 2)

    return YoungFunction("dual_power_sum", {"q": q, "r": r}, "psi", ev, d1, d2)


_FAMILY_ALIASES = {
    "power": "power",
    "power_law": "power",
    "powerlaw": "power",
    "zygmund": "zygmund",
    "zygmund_log": "zygmund",
    "power_sum": "power_sum",
    "powersum": "power_sum",
    "dual_power_sum": "dual_power_sum",
    "dualpowersum": "dual_power_sum",
    "dual": "dual_power_sum",
}

_FAMILY_PARAMS = {
    "power": ("p",),
    "zygmund": ("r",),
    "power_sum": ("p", "r", "eps"),
    "dual_power_sum": ("q", "r"),
}


def parse_family(spec) -> dict:
    """Normalise ``"power_sum:4,3,1"`` or ``{"family": ..., ...}`` to a record."""
    if isinstance(spec, str):
        name, _, args = spec.partition(":")
        key = _FAMILY_ALIASES.get(name.strip().lower())
        if key is None:
            raise ParameterError("family", name, f"one of {sorted(_FAMILY_PARAMS)}")
        values = [float(a) for a in args.split(",") if a.strip()] if args else []
        names = _FAMILY_PARAMS[key]
        if key == "power_sum" and len(values) == 2:
            values.append(1.0)
        if len(values) != len(names):
            raise ParameterError("family", spec, f"{key} takes parameters {names}")
        return {"family": key, **dict(zip(names, values))}
    if isinstance(spec, Mapping):
        name = str(spec.get("family", "")).lower()
        key = _FAMILY_ALIASES.get(name)
        if key is None:
            raise ParameterError("family", name, f"one of {sorted(_FAMILY_PARAMS)}")
        rec = {"family": key}
        for n in _FAMILY_PARAMS[key]:
            if n not in spec:
                if key == "power_sum" and n == "eps":
                    rec[n] = 1.0
                    continue
                raise ParameterError(n, None, f"{key} requires parameter {n!r}")
            rec[n] = float(spec[n])
        return rec
    raise ParameterError("family", spec, "string or mapping family record")


def make_family(spec) -> YoungFunction:
    """Build a built-in family from a spec string or record."""
    rec = parse_family(spec)
    key = rec.pop("family")
    if key == "power":
        return power_law(rec["p"])
    if key == "zygmund":
        return zygmund_log(rec["r"])
    if key == "power_sum":
        return power_sum(rec["p"], rec["r"], rec["eps"])
    return dual_power_sum(rec["q"], rec["r"])


# ---------------------------------------------------------------------------
# Conjugation
# ---------------------------------------------------------------------------


def invert_increasing(d1: ArrayFn, d2: ArrayFn, target, *, lo=1e-12, hi=1.0):
    """Solve ``d1(s) = target`` elementwise for an increasing bijection ``d1``.

    The bracket starts at ``[lo, hi]``; the upper end is doubled until it
    covers the target and the lower end shrunk likewise.  The root is then
    located by safeguarded Newton iteration on ``log d1`` against ``log s``.
    Targets below ``d1(1e-300)`` have their root under the smallest normal
    double and return 0.
    """
    t = _as_array(target)
    flat = t.ravel()
    out = np.zeros_like(flat)
    pos = flat > 0
    if not pos.any():
        return out.reshape(t.shape)
    y = flat[pos]
    ly = np.log(y)
    a = np.full(y.shape, float(lo))
    b = np.full(y.shape, float(hi))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        low = np.flatnonzero(d1(a) >= y)
        underflow = np.zeros(y.size, dtype=bool)
        while low.size:
            a[low] = np.maximum(a[low] * 1e-8, 1e-300)
            # the root lies in (0, 1e-300): report it as 0
            floor = a[low] <= 1e-300
            fa = d1(a[low])
            underflow[low[floor & (fa >= y[low])]] = True
            low = low[~floor & (fa >= y[low])]
        high = np.flatnonzero(d1(b) < y)
        while high.size:
            b[high] *= 16.0
            fb = d1(b[high])
            if not np.all(np.isfinite(fb)) or (b[high] > 1e300).any():
                reach = float(np.nanmax(np.where(np.isfinite(fb), fb, np.nan)))
                raise DomainLimitError(float(y[high].max()), (0.0, reach))
            high = high[fb < y[high]]
        la, lb = np.log(a), np.log(b)
        x = 0.5 * (la + lb)
        active = np.flatnonzero(~underflow)
        for _ in range(200):
            xa = x[active]
            s = np.exp(xa)
            g = d1(s)
            f = np.log(g) - ly[active]
            # shrink the bracket with the sign of f
            up = f > 0
            lb[active] = np.where(up, xa, lb[active])
            la[active] = np.where(up, la[active], xa)
            step = f / (s * d2(s) / g)
            xn = xa - step
            bad = ~np.isfinite(xn) | (xn <= la[active]) | (xn >= lb[active])
            xn = np.where(bad, 0.5 * (la[active] + lb[active]), xn)
            done = np.abs(xn - xa) <= 4e-16 * np.maximum(1.0, np.abs(xa))
            x[active] = xn
            active = active[~done]
            if not active.size:
                break
    out[pos] = np.where(underflow, 0.0, np.exp(x))
    return out.reshape(t.shape)


def conjugate(y: YoungFunction, *, force_numeric: bool = False) -> YoungFunction:
    """Return the complementary Young function of ``y``.

    Power laws map to power laws in closed form.  Otherwise the derivative
    of the complement is the inverse of ``y'``, the value follows from the
    equality case of Young's inequality, and the second derivative from the
    inverse-function rule.
    """
    if not force_numeric:
        if y.family == "power" and y.conjugate_of is None:
            p = y.params["p"]
            return power_law(p / (p - 1), allow_dual=True)
    side = "psi" if y.side == "phi" else "phi"

    def d1(t):
        return invert_increasing(y.d1, y.d2, t)

    def derivs(t):
        t = _as_array(t)
        s = d1(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            value = t * s - y.eval(s)
            second = 1.0 / y.d2(s)
        return np.maximum(value, 0.0), s, second

    def ev(t):
        return derivs(t)[0]

    def d2(t):
        return derivs(t)[2]

    return YoungFunction(
        "numeric_conjugate",
        {},
        side,
        ev,
        d1,
        d2,
        conjugate_of=y,
        _derivs=derivs,
    )


# ---------------------------------------------------------------------------
# Improper integrals int_0^t g(s) ds
# ---------------------------------------------------------------------------


class LogTabulatedIntegral:
    """``t -> int_0^t g(s) ds`` for integrands behaving like a power near 0.

    The integral is tabulated on Gauss-Legendre panels uniform in ``log s``
    between ``lo`` and ``hi``; each query adds one partial panel.  The piece
    below ``lo`` uses the local power-law exponent of ``g``.  Each panel is
    also integrated at lower order and a large discrepancy raises
    :class:`QuadratureError` naming the panel.
    """

    def __init__(self, g: ArrayFn, *, lo=1e-40, hi=1e40, width=0.05, rtol=1e-9):
        self.g = g
        self.x0 = math.log(lo)
        self.x1 = math.log(hi)
        n = int(math.ceil((self.x1 - self.x0) / width))
        self.h = (self.x1 - self.x0) / n
        self.n = n
        edges = self.x0 + self.h * np.arange(n + 1)
        self.edges = edges
        hi_part = self._panels(edges[:-1], np.full(n, self.h), _GL_NODES, _GL_WEIGHTS)
        lo_part = self._panels(edges[:-1], np.full(n, self.h), _GL_LOW_NODES, _GL_LOW_WEIGHTS)
        head = self.head(lo)
        total = head + np.concatenate([[0.0], np.cumsum(hi_part)])
        err = np.abs(hi_part - lo_part)
        scale = rtol * np.maximum(total[1:], np.abs(hi_part)) + 1e-300
        if not np.all(np.isfinite(hi_part)):
            k = int(np.flatnonzero(~np.isfinite(hi_part))[0])
            raise QuadratureError("non-finite integrand", (math.exp(edges[k]), math.exp(edges[k + 1])))
        bad = err > scale
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise QuadratureError(
                "panel quadrature did not converge",
                (math.exp(edges[k]), math.exp(edges[k + 1])),
                float(err[k] / max(total[k + 1], 1e-300)),
            )
        self.cum = total

    def _panels(self, a, width, nodes, weights):
        xs = a[:, None] + width[:, None] * (nodes[None, :] + 1.0) / 2.0
        s = np.exp(xs)
        with np.errstate(over="ignore", invalid="ignore"):
            vals = self.g(s) * s
        return 0.5 * width * (vals @ weights)

    def head(self, s0):
        """Approximate ``int_0^{s0} g`` assuming ``g(s) ~ c s**b`` below ``s0``."""
        s0 = _as_array(s0)
        eps = 1e-3
        with np.errstate(divide="ignore", invalid="ignore"):
            gp = self.g(s0 * math.exp(eps))
            gm = self.g(s0 * math.exp(-eps))
            b = (np.log(gp) - np.log(gm)) / (2 * eps)
            val = s0 * self.g(s0) / (b + 1.0)
        return np.where(np.isfinite(val) & (b > -1), val, 0.0)

    def __call__(self, t):
        t = _as_array(t)
        flat = t.ravel()
        out = np.zeros_like(flat)
        pos = flat > 0
        if not pos.any():
            return out.reshape(t.shape)
        x = np.log(flat[pos])
        res = np.empty_like(x)
        below = x < self.x0
        above = x > self.x1
        mid = ~(below | above)
        if below.any():
            res[below] = self.head(np.exp(x[below]))
        if mid.any():
            xm = x[mid]
            k = np.clip(np.floor((xm - self.x0) / self.h).astype(int), 0, self.n - 1)
            a = self.edges[k]
            res[mid] = self.cum[k] + self._panels(a, xm - a, _GL_NODES, _GL_WEIGHTS)
        if above.any():
            vals = []
            for xv in x[above]:
                val, abserr, info = integrate.quad(
                    lambda z: float(self.g(np.array(math.exp(z))) * math.exp(z)),
                    self.x1,
                    xv,
                    epsrel=1e-12,
                    full_output=1,
                )[:3]
                if abserr > 1e-8 * abs(val):
                    raise QuadratureError(
                        "adaptive quadrature did not converge",
                        (math.exp(self.x1), math.exp(xv)),
                        abserr / abs(val),
                    )
                vals.append(self.cum[-1] + val)
            res[above] = vals
        out[pos] = res
        return out.reshape(t.shape)


# ---------------------------------------------------------------------------
# Characteristic quantities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Extremum:
    value: float
    at: float
    on_boundary: bool


def scan_extremum(ratio: ArrayFn, which: str, window=SCAN_WINDOW, points=SCAN_POINTS) -> Extremum:
    """Infimum (``which="min"``) or supremum of ``ratio`` over (0, inf).

    Scans a log-spaced grid on ``window`` and refines an interior extremum
    by bounded scalar minimisation.  When the extremum sits on the window
    edge the scan is continued outwards, six decades at a time, until the
    value stops changing; the result is then flagged ``on_boundary``.
    """
    sign = 1.0 if which == "min" else -1.0

    def f(x):
        with np.errstate(all="ignore"):
            v = sign * ratio(np.exp(x))
        return np.where(np.isfinite(v), v, np.inf)

    x = np.linspace(math.log(window[0]), math.log(window[1]), points)
    vals = f(x)
    k = int(np.argmin(vals))
    best, best_x = float(vals[k]), float(x[k])
    if 0 < k < points - 1:
        res = optimize.minimize_scalar(
            lambda z: float(f(np.array(z))),
            bounds=(x[k - 1], x[k + 1]),
            method="bounded",
            options={"xatol": 1e-10},
        )
        if res.fun < best:
            best, best_x = float(res.fun), float(res.x)
        return Extremum(sign * best, math.exp(best_x), False)

    direction = -1.0 if k == 0 else 1.0
    edge = float(x[k])
    span = _EXTENSION_DECADES * math.log(10.0)
    for _ in range(_MAX_EXTENSIONS):
        xs = np.linspace(edge, edge + direction * span, 2001)
        v = f(xs)
        if not np.isfinite(v).any():
            break
        j = int(np.argmin(v))
        improved = v[j] < best - 1e-13 * max(1.0, abs(best))
        if v[j] < best:
            best, best_x = float(v[j]), float(xs[j])
        if not improved or j < len(xs) - 1:
            break
        edge = float(xs[-1])
    return Extremum(sign * best, math.exp(best_x), True)


def _ratio_first(y: YoungFunction) -> ArrayFn:
    def ratio(s):
        v, d, _ = y.derivs(s)
        return s * d / v

    return ratio


def _ratio_second(y: YoungFunction) -> ArrayFn:
    def ratio(s):
        _, d, dd = y.derivs(s)
        return s * dd / d

    return ratio


@dataclass(frozen=True)
class CharQuantities:
    """The four characteristic ratios of a Young pair and derived constants."""

    m: float
    M: float
    m_tilde: float
    M_tilde: float
    numeric_tolerance: float = 1e-9
    boundary: Mapping[str, bool] = field(default_factory=dict)

    @property
    def p(self) -> float:
        return self.M_tilde + 1.0

    @property
    def D(self) -> float:
        return dimension_constant(self.M, self.m_tilde, self.M_tilde)

    @property
    def upper_factor(self) -> float:
        """``2 max{1, M/m_tilde}``, the constant in the pointwise upper bound."""
        return 2.0 * max(1.0, self.M / self.m_tilde)

    @property
    def hessian_factor(self) -> float:
        """``(1/10) (M_tilde/m_tilde * (m_tilde-1)/(M_tilde-1))**(1/2)``."""
        return hessian_factor(self.m_tilde, self.M_tilde)

    def as_tuple(self):
        return (self.m, self.M, self.m_tilde, self.M_tilde)


def dimension_constant(M: float, m_tilde: float, M_tilde: float) -> float:
    ratio = (m_tilde / M_tilde) * (M_tilde - 1.0) / (m_tilde - 1.0)
    return max(1.0, M / m_tilde) * math.sqrt(ratio)


def hessian_factor(m_tilde: float, M_tilde: float) -> float:
    if M_tilde == m_tilde:
        return 0.1
    return 0.1 * math.sqrt((M_tilde / m_tilde) * (m_tilde - 1.0) / (M_tilde - 1.0))


def scan_quantities(y: YoungFunction):
    """Raw inf/sup of ``sY'/Y`` and ``sY''/Y'`` for any Young function."""
    r1, r2 = _ratio_first(y), _ratio_second(y)
    return (
        scan_extremum(r1, "min"),
        scan_extremum(r1, "max"),
        scan_extremum(r2, "min"),
        scan_extremum(r2, "max"),
    )


def char_quantities(pair_or_phi) -> CharQuantities:
    """Compute ``(m, M, m_tilde, M_tilde)`` from the Phi side of a pair."""
    phi = pair_or_phi.phi if isinstance(pair_or_phi, ConjugatePair) else pair_or_phi
    lo1, hi1, lo2, hi2 = scan_quantities(phi)
    if lo2.value < 1.0 + 1e-9:
        raise InvalidYoungPairError(
            f"inf s*Phi''/Phi' = {lo2.value:.12g} at s={lo2.at:.3g}; the assumptions need it > 1"
        )
    if not (math.isfinite(hi1.value) and math.isfinite(hi2.value)):
        raise InvalidYoungPairError("characteristic ratios are unbounded on the scan window")
    return CharQuantities(
        m=lo1.value,
        M=hi1.value,
        m_tilde=lo2.value,
        M_tilde=hi2.value,
        boundary={
            "m": lo1.on_boundary,
            "M": hi1.on_boundary,
            "m_tilde": lo2.on_boundary,
            "M_tilde": hi2.on_boundary,
        },
    )


# ---------------------------------------------------------------------------
# Pairs
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConjugatePair:
    """A mutually complementary pair ``(Phi, Psi)``.

    ``closed_forms=False`` forces the auxiliary integrals through quadrature
    even when a family provides them in closed form.
    """

    phi: YoungFunction
    psi: YoungFunction
    closed_forms: bool = True

    @cached_property
    def quantities(self) -> CharQuantities:
        return char_quantities(self)

    @property
    def label(self) -> str:
        base = self.phi if self.phi.conjugate_of is None else self.psi
        return base.label

    @cached_property
    def _i_table(self):
        phi = self.phi
        if phi.conjugate_of is not None:
            # s = Psi'(r): int_0^t Phi'(s)/s^2 ds = int_0^{Phi'(t)} r Psi''(r) / Psi'(r)^2 dr
            psi = phi.conjugate_of
            inner = LogTabulatedIntegral(lambda r: r * psi.d2(r) / psi.d1(r) ** 2)
            return lambda t: inner(phi.d1(t))

        def g(s):
            return phi.d1(s) / s**2

        return LogTabulatedIntegral(g)

    @cached_property
    def _j_table(self):
        psi = self.psi
        if psi.conjugate_of is not None:
            # s = Phi'(r): int_0^t ds / Psi'(s) = int_0^{Psi'(t)} Phi''(r) / r dr
            phi = psi.conjugate_of
            inner = LogTabulatedIntegral(lambda r: phi.d2(r) / r)
            return lambda t: inner(psi.d1(t))

        def g(s):
            return 1.0 / psi.d1(s)

        return LogTabulatedIntegral(g)

    def I(self, t):  # noqa: E743
        """``int_0^t Phi'(s)/s^2 ds``."""
        if self.closed_forms and self.phi.closed_i is not None:
            return self.phi.closed_i(t)
        return self._i_table(t)

    def J(self, t):
        """``int_0^t ds/Psi'(s)``."""
        if self.closed_forms and self.psi.closed_j is not None:
            return self.psi.closed_j(t)
        return self._j_table(t)


def make_pair(spec, *, closed_forms: bool = True) -> ConjugatePair:
    """Build the complementary pair generated by a family spec."""
    y = spec if isinstance(spec, YoungFunction) else make_family(spec)
    if y.side == "phi":
        return ConjugatePair(y, conjugate(y), closed_forms)
    return ConjugatePair(conjugate(y), y, closed_forms)


def aux_integrals(pair: ConjugatePair, t):
    """Return ``(I(t), J(t))``."""
    return pair.I(t), pair.J(t)


# ---------------------------------------------------------------------------
# Checks on a pair
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MarginRow:
    quantity: str
    computed: float
    bound: float
    margin: float


def verify_dual_quantities(pair: ConjugatePair) -> list[MarginRow]:
    """Scan the Psi side independently and compare with the dual formulas.

    ``margin`` is the signed relative discrepancy ``(computed-bound)/bound``.
    """
    q = pair.quantities
    lo1, hi1, lo2, hi2 = scan_quantities(pair.psi)
    rows = [
        ("inf s*Psi'/Psi", lo1.value, q.M / (q.M - 1)),
        ("sup s*Psi'/Psi", hi1.value, q.m / (q.m - 1)),
        ("inf s*Psi''/Psi'", lo2.value, 1 / q.M_tilde),
        ("sup s*Psi''/Psi'", hi2.value, 1 / q.m_tilde),
    ]
    return [MarginRow(name, c, b, (c - b) / b) for name, c, b in rows]


def doubling_constants(pair: ConjugatePair, window=SCAN_WINDOW, points=SCAN_POINTS):
    """Grid suprema of ``Phi(2s)/Phi(s)`` and ``Psi(2s)/Psi(s)``.

    Also checks them against ``2**M`` and ``2**(m/(m-1)) <= 4``; the result
    is ``(K_phi, K_psi, ok)``.
    """
    s = np.logspace(math.log10(window[0]), math.log10(window[1]), points)
    with np.errstate(all="ignore"):
        k_phi = float(np.nanmax(pair.phi(2 * s) / pair.phi(s)))
        k_psi = float(np.nanmax(pair.psi(2 * s) / pair.psi(s)))
    q = pair.quantities
    slack = 1 + 1e-9
    ok = k_phi <= 2**q.M * slack and k_psi <= 2 ** (q.m / (q.m - 1)) * slack and 2 ** (q.m / (q.m - 1)) <= 4 * slack
    return k_phi, k_psi, ok


def luxemburg_norm(phi: YoungFunction, values, cell_volume: float = 1.0, *, rtol: float = 1e-13) -> float:
    """Luxemburg norm of sampled values, each weighted by ``cell_volume``.

    Bisection on ``log(alpha)``; the modular ``sum Phi(|f|/alpha) * vol`` is
    continuous and strictly decreasing in ``alpha`` where positive.
    """
    if hasattr(values, "values") and hasattr(values, "grid"):
        cell_volume = values.grid.cell_volume
        values = values.values
    a = np.abs(np.asarray(values)).ravel()
    a = a[a > 0]
    if a.size == 0:
        return 0.0

    def modular(log_alpha):
        with np.errstate(over="ignore"):
            return float(np.sum(phi(a / math.exp(log_alpha)))) * cell_volume

    hi = math.log(a.max())
    while modular(hi) > 1:
        hi += 1.0
    lo = hi - 1.0
    while modular(lo) <= 1:
        lo -= 1.0
    while hi - lo > rtol:
        mid = 0.5 * (lo + hi)
        if modular(mid) > 1:
            lo = mid
        else:
            hi = mid
    return math.exp(hi)


def cianchi_probe(phi: YoungFunction, p: float, *, blocks: int = 60) -> str:
    """Classify ``int_1^inf Phi(s)/s**(p+1) ds`` as convergent, divergent or indeterminate.

    Splits the integral into dyadic blocks.  Geometric decay of the blocks
    gives "convergent"; blocks that do not decay at all give "divergent".
    """
    if not p > 2:
        raise ParameterError("p", p, "p > 2")
    ln2 = math.log(2.0)
    a = np.arange(blocks)[:, None] * ln2
    xs = a + ln2 * (_GL_NODES[None, :] + 1.0) / 2.0
    s = np.exp(xs)
    with np.errstate(over="ignore"):
        vals = phi(s) / s**p
    b = 0.5 * ln2 * (vals @ _GL_WEIGHTS)
    if not np.all(np.isfinite(b)):
        return "indeterminate"
    tail = b[blocks // 2 :]
    ratios = tail[1:] / tail[:-1]
    if ratios.max() <= 1 - 1e-3:
        return "convergent"
    if tail[-1] >= 0.5 * tail[0]:
        return "divergent"
    return "indeterminate"


def young_gap(pair: ConjugatePair, s, t):
    """``Phi(s) + Psi(t) - s*t`` (nonnegative by Young's inequality)."""
    s, t = _as_array(s), _as_array(t)
    return pair.phi(s) + pair.psi(t) - s * t
