"""Independent reference computations used to cross-check the main modules.

Nothing here shares code paths with the production evaluators: suprema are
found by golden-section search, ellipticity constants by Monte Carlo
sampling, conjugate values by adaptive quadrature of the conjugate derivative.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate

GOLDEN = (math.sqrt(5) - 1) / 2


def golden_section_max(func, lo: float, hi: float, *, xtol: float = 1e-13, max_iter: int = 400):
    """Maximiser and maximum of a unimodal ``func`` on ``[lo, hi]``."""
    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = func(x1), func(x2)
    for _ in range(max_iter):
        if b - a <= xtol * max(1.0, abs(a) + abs(b)):
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = func(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = func(x1)
    x = 0.5 * (a + b)
    return x, func(x)


def legendre_sup(phi, t: float, *, lo: float = 1e-8, hi: float = 1e8) -> float:
    """Brute-force ``sup_s (s t - Phi(s))`` by golden-section search in ``log s``.

    ``s t - Phi(s)`` is concave in ``s``, hence unimodal in ``log s``.
    """
    def gain(x):
        s = math.exp(x)
        return s * t - float(phi(s))

    _, best = golden_section_max(gain, math.log(lo), math.log(hi))
    return max(best, 0.0)


def conjugate_by_quadrature(psi_d1, t: float) -> float:
    """``Psi(t) = int_0^t Psi'`` by adaptive quadrature."""
    value, _ = integrate.quad(lambda x: float(psi_d1(x)), 0.0, t, epsabs=0, epsrel=1e-12, limit=200)
    return value


def power_bellman(p: float, delta: float, u, v):
    """Closed-form Bellman function of the pair ``(t^p/p, t^q/q)``."""
    q = p / (p - 1)
    a = np.abs(np.asarray(u))
    b = np.abs(np.asarray(v))
    base = a**p / p + b**q / q
    lower = (2 / p) * a**p + (2 / q - 1) * b**q
    upper = a**2 * b ** (2 - q)
    return base + delta / (2 - q) * np.where(a**p >= b**q, lower, upper)


def random_unit_vectors(rng, n: int, d: int) -> np.ndarray:
    z = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def mc_lambda_min(a: np.ndarray, samples: int = 100_000, seed: int = 0) -> float:
    """Monte Carlo ``inf Re <A xi, xi>`` over unit ``xi``."""
    xi = random_unit_vectors(np.random.default_rng(seed), samples, a.shape[0])
    return float(np.min(np.real(np.einsum("nj,jk,nk->n", xi.conj(), a, xi))))


def mc_norm(a: np.ndarray, samples: int = 100_000, seed: int = 0) -> float:
    """Monte Carlo ``sup |<A xi, eta>|`` over unit pairs.

    For fixed ``xi`` the supremum over ``eta`` is ``|A xi|``, so only ``xi`` is sampled.
    """
    xi = random_unit_vectors(np.random.default_rng(seed), samples, a.shape[0])
    return float(np.max(np.linalg.norm(xi @ a.T, axis=1)))


def mc_delta_p(a: np.ndarray, p: float, samples: int = 1_000_000, seed: int = 0, chunk: int = 200_000) -> float:
    """Monte Carlo ``inf Re <A xi, xi + |1 - 2/p| conj(xi)>`` over unit ``xi``."""
    rng = np.random.default_rng(seed)
    mu = abs(1 - 2 / p)
    best = math.inf
    for start in range(0, samples, chunk):
        n = min(chunk, samples - start)
        xi = random_unit_vectors(rng, n, a.shape[0])
        ax = xi @ a.T
        val = np.real(np.einsum("nj,nj->n", ax, xi.conj()) + mu * np.einsum("nj,nj->n", ax, xi))
        best = min(best, float(val.min()))
    return best


def rotation_delta_p(phi: float, p: float) -> float:
    """``Delta_p(e^{i phi} I) = cos(phi) - |1 - 2/p|``."""
    return math.cos(phi) - abs(1 - 2 / p)
