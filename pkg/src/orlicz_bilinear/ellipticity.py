"""Ellipticity constants of complex matrix fields.

A :class:`MatrixField` holds either one constant ``d x d`` complex matrix or
one matrix per grid node.  Essential infima and suprema over space become
plain minima and maxima over the stored matrices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InapplicableError, NonEllipticError, ParameterError
from .reports import MarginReport
from .young import ConjugatePair, SCAN_POINTS, SCAN_WINDOW


@dataclass(eq=False)
class MatrixField:
    """Constant matrix (shape ``(d, d)``) or field (shape ``grid + (d, d)``)."""

    values: np.ndarray
    name: str = "A"
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim < 2 or v.shape[-1] != v.shape[-2]:
            raise ParameterError("matrix shape", v.shape, "(..., d, d)")
        if not np.all(np.isfinite(v)):
            raise ParameterError(self.name, "non-finite entry", "finite coefficients")
        self.values = v

    @property
    def dim(self) -> int:
        return self.values.shape[-1]

    @property
    def is_constant(self) -> bool:
        return self.values.ndim == 2

    @property
    def stack(self) -> np.ndarray:
        """All matrices as an array of shape ``(n, d, d)``."""
        return self.values.reshape(-1, self.dim, self.dim)

    @property
    def constant(self) -> np.ndarray:
        if not self.is_constant:
            raise ValueError(f"{self.name} is not a constant matrix")
        return self.values

    def scaled(self, factor: complex) -> "MatrixField":
        return MatrixField(self.values * factor, self.name)

    def at_nodes(self, shape: tuple[int, ...]) -> np.ndarray:
        """Matrices broadcast to grid ``shape``, returned as ``shape + (d, d)``."""
        if self.is_constant:
            return np.broadcast_to(self.values, tuple(shape) + self.values.shape)
        if self.values.shape[:-2] != tuple(shape):
            raise ParameterError(
                f"{self.name} grid", self.values.shape[:-2], f"field sampled on grid {tuple(shape)}"
            )
        return self.values


def as_field(a, name: str = "A") -> MatrixField:
    return a if isinstance(a, MatrixField) else MatrixField(np.asarray(a, dtype=complex), name)


# ---------------------------------------------------------------------------
# basic constants
# ---------------------------------------------------------------------------


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def lambda_min(a) -> float:
    """Smallest eigenvalue of the Hermitian part, minimised over the field."""
    a = as_field(a)
    if "lambda" not in a._cache:
        a._cache["lambda"] = float(np.linalg.eigvalsh(hermitian_part(a.stack))[:, 0].min())
    return a._cache["lambda"]


def lambda_max_norm(a) -> float:
    """Largest singular value, maximised over the field."""
    a = as_field(a)
    if "Lambda" not in a._cache:
        a._cache["Lambda"] = float(np.linalg.svd(a.stack, compute_uv=False)[:, 0].max())
    return a._cache["Lambda"]


def real_form(a: np.ndarray, kappa) -> np.ndarray:
    """Symmetric real ``2d x 2d`` matrix of ``xi -> Re<A xi, xi + kappa conj(xi)>``.

    ``xi = alpha + i beta`` is identified with ``(alpha, beta)``.  ``a`` may be
    a stack ``(n, d, d)``; ``kappa`` a scalar or array broadcasting against it.
    """
    a = np.asarray(a, dtype=complex)
    d = a.shape[-1]
    re, im = a.real, a.imag
    top = np.concatenate([re, -im], axis=-1)
    bottom = np.concatenate([im, re], axis=-1)
    block = np.concatenate([top, bottom], axis=-2)
    flip = np.concatenate([np.ones(d), -np.ones(d)])
    k = np.asarray(kappa, dtype=float)[..., None, None]
    form = block + k * flip[:, None] * block
    return 0.5 * (form + np.swapaxes(form, -1, -2))


def p_coefficient(p: float) -> float:
    """``|1 - 2/p|``."""
    return abs(1.0 - 2.0 / p)


def delta_p(a, p: float) -> float:
    """p-ellipticity constant via the smallest eigenvalue of the real form."""
    p = float(p)
    if not p >= 2:
        raise ParameterError("p", p, "p >= 2")
    a = as_field(a)
    key = ("delta_p", p)
    if key not in a._cache:
        forms = real_form(a.stack, p_coefficient(p))
        a._cache[key] = float(np.linalg.eigvalsh(forms)[:, 0].min())
    return a._cache[key]


def kappa_samples(pair: ConjugatePair, extra: int = 62) -> np.ndarray:
    """Values of ``(s Phi'' - Phi')/(s Phi'' + Phi')`` to test in the Phi-form.

    The form's minimum eigenvalue is concave in the coefficient, so the
    extreme coefficients decide the infimum; interior quantiles of the
    scanned s-grid are included as a cross-check.
    """
    q = pair.quantities
    s = np.logspace(math.log10(SCAN_WINDOW[0]), math.log10(SCAN_WINDOW[1]), SCAN_POINTS)
    _, d1, d2 = pair.phi.derivs(s)
    rho = s * d2 / d1
    kap = (rho - 1.0) / (rho + 1.0)
    kap = kap[np.isfinite(kap)]
    ends = [(q.m_tilde - 1) / (q.m_tilde + 1), (q.M_tilde - 1) / (q.M_tilde + 1)]
    inner = np.quantile(kap, np.linspace(0, 1, extra)) if kap.size else []
    return np.unique(np.concatenate([ends, inner]))


def delta_phi(a, pair: ConjugatePair) -> float:
    """Infimum over s of the p-ellipticity form with an s-dependent coefficient."""
    a = as_field(a)
    kap = kappa_samples(pair)
    forms = real_form(a.stack[:, None], kap[None, :])
    return float(np.linalg.eigvalsh(forms)[..., 0].min())


def c_p_constant(a, b, p: float) -> float:
    """``max Lambda / (min Delta_p * min lambda)`` for the pair ``(A, B)``."""
    a, b = as_field(a, "A"), as_field(b, "B")
    dpa, dpb = delta_p(a, p), delta_p(b, p)
    for name, val in ((a.name, dpa), (b.name, dpb)):
        if val <= 0:
            raise NonEllipticError(name, "Delta_p", val, p)
    lam = min(lambda_min(a), lambda_min(b))
    return max(lambda_max_norm(a), lambda_max_norm(b)) / (min(dpa, dpb) * lam)


def delta_param(a, b, pair: ConjugatePair) -> float:
    """The small parameter of the Bellman function."""
    a, b = as_field(a, "A"), as_field(b, "B")
    q = pair.quantities
    p = q.p
    dpa, dpb = delta_p(a, p), delta_p(b, p)
    for name, val in ((a.name, dpa), (b.name, dpb)):
        if val <= 0:
            raise NonEllipticError(name, "Delta_p", val, p)
    la, lb = lambda_max_norm(a), lambda_max_norm(b)
    terms = (
        dpa / (8 * la),
        dpb / (4 * lb),
        lambda_min(a) * dpb / (100 * max(la, lb) ** 2),
    )
    return (q.m_tilde - 1) / q.m_tilde * min(terms)


@dataclass(frozen=True)
class EllipticityReport:
    lam: float
    Lam: float
    delta_p: float
    delta_phi: float
    p: float
    c_p: float | None = None
    delta_param: float | None = None

    def rows(self):
        out = [
            ("lambda", self.lam),
            ("Lambda", self.Lam),
            ("delta_p", self.delta_p),
            ("delta_phi", self.delta_phi),
            ("p", self.p),
        ]
        if self.c_p is not None:
            out.append(("c_p", self.c_p))
        if self.delta_param is not None:
            out.append(("delta", self.delta_param))
        return out


def ellipticity_report(a, pair: ConjugatePair, b=None) -> EllipticityReport:
    a = as_field(a)
    p = pair.quantities.p
    c = dl = None
    if b is not None:
        c = c_p_constant(a, b, p)
        dl = delta_param(a, b, pair)
    return EllipticityReport(lambda_min(a), lambda_max_norm(a), delta_p(a, p), delta_phi(a, pair), p, c, dl)


# ---------------------------------------------------------------------------
# dissipativity condition for symmetric imaginary part
# ---------------------------------------------------------------------------


def cm_dissipativity_check(a, pair: ConjugatePair, samples: int = 2000, *, seed: int = 0, s_points: int = 200):
    """Sampled margins of the functional dissipativity condition.

    Both sides are divided by ``Phi'(s)/s``, leaving
    ``2 sqrt(rho) <Re A xi, xi> - |rho - 1| |<Im A xi, xi>|`` with
    ``rho = s Phi''/Phi'``, minimised over unit real ``xi``, grid nodes and
    log-spaced ``s``.  For power laws the power-case condition is evaluated
    too and the largest difference from it is stored in ``details``.
    """
    a = as_field(a)
    stack = a.stack
    if not np.allclose(stack.imag, np.swapaxes(stack.imag, -1, -2), atol=1e-12):
        raise InapplicableError(f"Im {a.name} is not symmetric; the condition does not characterise dissipativity")
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal((samples, a.dim))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    re_q = np.einsum("si,nij,sj->ns", xi, stack.real, xi)
    im_q = np.abs(np.einsum("si,nij,sj->ns", xi, stack.imag, xi))
    s = np.logspace(math.log10(SCAN_WINDOW[0]), math.log10(SCAN_WINDOW[1]), s_points)
    _, d1, d2 = pair.phi.derivs(s)
    rho = s * d2 / d1
    margin = 2 * np.sqrt(rho)[None, None, :] * re_q[..., None] - np.abs(rho - 1)[None, None, :] * im_q[..., None]
    k = np.unravel_index(int(np.argmin(margin)), margin.shape)
    details = {"s_window": SCAN_WINDOW}
    phi = pair.phi if pair.phi.conjugate_of is None else None
    if phi is not None and phi.family == "power":
        p = phi.params["p"]
        power = 2 * math.sqrt(p - 1) * re_q - abs(p - 2) * im_q
        details["power_case_max_diff"] = float(np.max(np.abs(margin - power[..., None])))
    return MarginReport(
        f"dissipativity[{a.name}]",
        int(margin.size),
        float(margin[k]),
        {"node": int(k[0]), "xi": xi[k[1]], "s": float(s[k[2]])},
        0.0,
        details,
    )
