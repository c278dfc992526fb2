"""Divergence-form heat semigroups on a periodic grid and the bilinear embedding.

The operator ``-div(A grad)`` is discretised in flux form on the torus
``[0, length)^d`` as ``sum_jk D_j^* diag(A_jk) D_k`` with forward differences
``D_k``; the coefficient of a cell is the average of ``A`` over its corners,
which keeps every ellipticity constant at least as good as the nodal field.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import trapezoid
from scipy.linalg import expm

from .bellman import BellmanContext, bellman_gradient, profile
from .ellipticity import MatrixField, as_field, c_p_constant, lambda_max_norm, lambda_min
from .errors import NonEllipticError, OrliczError, ParameterError
from .young import ConjugatePair, luxemburg_norm


@dataclass(frozen=True)
class Grid:
    d: int
    N: int
    length: float = 1.0

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ParameterError("d", self.d, "d in {1, 2}")
        if self.N < 8:
            raise ParameterError("N", self.N, "N >= 8")
        if not self.length > 0:
            raise ParameterError("length", self.length, "length > 0")

    @property
    def h(self) -> float:
        return self.length / self.N

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def size(self) -> int:
        return self.N**self.d

    def coordinates(self) -> list[np.ndarray]:
        x = self.h * np.arange(self.N)
        return list(np.meshgrid(*([x] * self.d), indexing="ij"))

    @property
    def smallest_symbol(self) -> float:
        """Smallest nonzero eigenvalue of the discrete Laplacian."""
        return (2 - 2 * math.cos(2 * math.pi / self.N)) / self.h**2

    def wavenumbers(self) -> list[np.ndarray]:
        k = 2 * math.pi * np.fft.fftfreq(self.N, d=self.h)
        return list(np.meshgrid(*([k] * self.d), indexing="ij"))


@dataclass
class GridFunction:
    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).reshape(self.grid.shape)
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("grid function", "non-finite values", "finite values")

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume))

    def mean(self) -> complex:
        return complex(self.values.mean())

    def __add__(self, other):
        return GridFunction(self.values + other.values, self.grid)

    def __mul__(self, c):
        return GridFunction(self.values * c, self.grid)

    __rmul__ = __mul__


def _forward_difference(grid: Grid, axis: int) -> sp.csr_matrix:
    n = grid.N
    one = sp.eye(n, format="csr")
    shift = sp.csr_matrix((np.ones(n), (np.arange(n), (np.arange(n) + 1) % n)), shape=(n, n))
    d1 = (shift - one) / grid.h
    mats = [sp.eye(n, format="csr")] * grid.d
    mats[axis] = d1
    out = mats[0]
    for m in mats[1:]:
        out = sp.kron(out, m, format="csr")
    return out.tocsr()


def cell_average(field_values: np.ndarray, d: int) -> np.ndarray:
    """Average of nodal matrices over the ``2^d`` corners of each cell."""
    out = np.zeros_like(field_values)
    for corner in np.ndindex(*([2] * d)):
        shifted = field_values
        for axis, step in enumerate(corner):
            if step:
                shifted = np.roll(shifted, -1, axis=axis)
        out = out + shifted
    return out / 2**d


@dataclass(eq=False)
class DiscreteOperator:
    matrix: sp.csr_matrix
    grid: Grid
    field: MatrixField  # cell coefficients actually used
    source: MatrixField

    def apply(self, f):
        vals = f.values if isinstance(f, GridFunction) else np.asarray(f)
        return (self.matrix @ vals.ravel()).reshape(self.grid.shape)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def assemble(a, grid: Grid) -> DiscreteOperator:
    """Flux-form discretisation of ``-div(A grad)`` with periodic wrap."""
    a = as_field(a)
    if a.dim != grid.d:
        raise ParameterError(f"{a.name} dimension", a.dim, f"matrix size equal to grid dimension {grid.d}")
    lam = lambda_min(a)
    if lam <= 0:
        raise NonEllipticError(a.name, "lambda", lam)
    nodal = np.array(a.at_nodes(grid.shape))
    cells = nodal if a.is_constant else cell_average(nodal, grid.d)
    diffs = [_forward_difference(grid, k) for k in range(grid.d)]
    mat = sp.csr_matrix((grid.size, grid.size), dtype=complex)
    for j in range(grid.d):
        for k in range(grid.d):
            coef = cells[..., j, k]
            coef = np.broadcast_to(coef, grid.shape).ravel()
            mat = mat + diffs[j].conj().T @ sp.diags(coef) @ diffs[k]
    eff = MatrixField(cells, a.name)
    return DiscreteOperator(mat.tocsr(), grid, eff, a)


def symbol(a: np.ndarray, grid: Grid) -> np.ndarray:
    """Fourier symbol of the discrete operator for a constant matrix ``a``."""
    ks = grid.wavenumbers()
    h = grid.h
    out = np.zeros(grid.shape, dtype=complex)
    for j in range(grid.d):
        for k in range(grid.d):
            out += a[j, k] * (np.exp(-1j * h * ks[j]) - 1) * (np.exp(1j * h * ks[k]) - 1) / h**2
    return out


def discrete_gradient(f) -> np.ndarray:
    """Forward periodic differences, shape ``(d,) + grid.shape``."""
    grid = f.grid
    vals = f.values
    return np.stack([(np.roll(vals, -1, axis=k) - vals) / grid.h for k in range(grid.d)])


def gradient_magnitude(f) -> np.ndarray:
    g = discrete_gradient(f)
    return np.sqrt(np.sum(np.abs(g) ** 2, axis=0))


# ---------------------------------------------------------------------------
# time stepping
# ---------------------------------------------------------------------------


class EvolutionError(OrliczError):
    pass


class Propagator:
    """Adaptive Crank-Nicolson integrator for ``y' = -L y`` on zero-mean data.

    Steps are powers of two so that the LU factorisations of
    ``I + dt/2 L`` can be reused; each step is checked against two half
    steps and the half-step result is kept.  A remainder too small to matter
    (``remaining * |L| <= 1e-5``) is finished with one explicit Euler step.
    """

    def __init__(self, op: DiscreteOperator, rtol: float = 1e-8, dt0: float | None = None):
        self.op = op
        self.rtol = rtol
        self.n = op.grid.size
        self._lu: dict[float, tuple] = {}
        self.lmax = 4 * op.grid.d * lambda_max_norm(op.field) / op.grid.h**2
        self.dt = 2.0 ** math.floor(math.log2(dt0 if dt0 is not None else 1e-2 / self.lmax))
        self.steps = 0
        self.rejected = 0

    def _factor(self, dt):
        lu = self._lu.get(dt)
        if lu is None:
            eye = sp.identity(self.n, dtype=complex, format="csc")
            lhs = (eye + 0.5 * dt * self.op.matrix).tocsc()
            rhs = (eye - 0.5 * dt * self.op.matrix).tocsr()
            try:
                lu = (spla.splu(lhs), rhs)
            except RuntimeError as exc:
                raise EvolutionError(f"factorisation failed for dt={dt:g}: {exc}") from exc
            if len(self._lu) > 128:
                self._lu.clear()
            self._lu[dt] = lu
        return lu

    def _step(self, y, dt):
        solver, rhs = self._factor(dt)
        return solver.solve(rhs @ y)

    def advance(self, y: np.ndarray, t: float) -> np.ndarray:
        """Integrate the flattened zero-mean state ``y`` forward by ``t``."""
        remaining = float(t)
        y = np.asarray(y, dtype=complex).copy()
        while remaining > 0:
            if remaining * self.lmax <= 1e-5:
                y = y - remaining * (self.op.matrix @ y)
                break
            dt = self.dt if self.dt <= remaining else 2.0 ** math.floor(math.log2(remaining))
            full = self._step(y, dt)
            half = self._step(self._step(y, dt / 2), dt / 2)
            scale = max(np.linalg.norm(half), 1e-300)
            err = np.linalg.norm(full - half) / scale
            if not np.isfinite(err):
                raise EvolutionError(f"non-finite state at dt={dt:g}")
            if err > self.rtol and dt > 1e-14:
                self.dt = dt / 2
                self.rejected += 1
                continue
            y = half
            remaining -= dt
            self.steps += 1
            if dt == self.dt and err < self.rtol / 8:
                self.dt *= 2
        return y


def evolve(op: DiscreteOperator, f, t: float, *, rtol: float = 1e-8, propagator: Propagator | None = None):
    """``exp(-t L) f`` by adaptive Crank-Nicolson; constants are carried exactly."""
    if t < 0:
        raise ParameterError("t", t, "t >= 0")
    f = f if isinstance(f, GridFunction) else GridFunction(f, op.grid)
    if t == 0:
        return GridFunction(f.values.copy(), f.grid)
    mean = f.values.mean()
    prop = propagator or Propagator(op, rtol)
    y = prop.advance((f.values - mean).ravel(), t)
    return GridFunction(y.reshape(op.grid.shape) + mean, op.grid)


def evolve_exact(op: DiscreteOperator, f, t: float):
    """Matrix-exponential oracle (dense, for small grids)."""
    if op.grid.size > 4096:
        raise ParameterError("grid size", op.grid.size, "at most 4096 points for the dense oracle")
    f = f if isinstance(f, GridFunction) else GridFunction(f, op.grid)
    y = expm(-t * op.dense()) @ f.values.ravel()
    return GridFunction(y, op.grid)


def evolve_fourier(a: np.ndarray, f, t: float):
    """Fourier oracle for a constant matrix."""
    sig = symbol(np.asarray(a, dtype=complex), f.grid)
    return GridFunction(np.fft.ifftn(np.exp(-t * sig) * np.fft.fftn(f.values)), f.grid)


# ---------------------------------------------------------------------------
# the embedding
# ---------------------------------------------------------------------------


def auto_t_max(grid: Grid, lam_a: float, lam_b: float, decay: float = 1e-10) -> float:
    """Time after which non-constant modes have decayed by ``decay`` in energy."""
    return math.log(1 / decay) / (2 * min(lam_a, lam_b) * grid.smallest_symbol)


def geometric_times(t_max: float, ratio: float = 1.15, first: float = 1e-8) -> np.ndarray:
    """``t_k = T_max ratio^(k-K)`` from about ``first * T_max`` up to ``T_max``."""
    count = int(math.ceil(math.log(1 / first) / math.log(ratio)))
    return t_max * ratio ** (np.arange(count + 1) - count)


@dataclass
class Trajectory:
    times: np.ndarray
    f: list
    g: list


def trajectories(op_a, op_b, f, g, times, rtol=1e-8) -> Trajectory:
    """Solutions at each requested time (sorted, starting after 0)."""
    pa, pb = Propagator(op_a, rtol), Propagator(op_b, rtol)
    fa, gb = [], []
    mf, mg = f.values.mean(), g.values.mean()
    yf = (f.values - mf).ravel()
    yg = (g.values - mg).ravel()
    prev = 0.0
    for t in times:
        yf = pa.advance(yf, t - prev)
        yg = pb.advance(yg, t - prev)
        prev = t
        fa.append(GridFunction(yf.reshape(f.grid.shape) + mf, f.grid))
        gb.append(GridFunction(yg.reshape(g.grid.shape) + mg, g.grid))
    return Trajectory(np.asarray(times), fa, gb)


def bilinear_integrand(f, g) -> float:
    """``sum |grad f| |grad g| h^d``."""
    return float(np.sum(gradient_magnitude(f) * gradient_magnitude(g)) * f.grid.cell_volume)


@dataclass
class LhsResult:
    value: float
    head: float
    body: float
    tail_bound: float
    times: np.ndarray
    integrand: np.ndarray

    @property
    def upper(self) -> float:
        return self.value + self.tail_bound


def embedding_lhs(op_a, op_b, f, g, t_max="auto", *, ratio=1.15, first=1e-8, rtol=1e-8) -> LhsResult:
    """Time integral of the bilinear integrand on a geometric grid with a certified tail bound.

    The tail beyond ``T_max`` is bounded by Cauchy-Schwarz and the energy
    identity ``d/dt |y|^2 <= -2 lambda |grad y|^2`` on the zero-mean parts.
    """
    grid = f.grid
    lam_a, lam_b = lambda_min(op_a.field), lambda_min(op_b.field)
    if t_max == "auto":
        t_max = auto_t_max(grid, lam_a, lam_b)
    times = geometric_times(float(t_max), ratio, first)
    traj = trajectories(op_a, op_b, f, g, times, rtol)
    vals = np.array([bilinear_integrand(a, b) for a, b in zip(traj.f, traj.g)])
    head = vals[0] * times[0]
    body = float(trapezoid(vals, times))
    fa, gb = traj.f[-1], traj.g[-1]
    ea = np.sum(np.abs(fa.values - fa.values.mean()) ** 2) * grid.cell_volume
    eb = np.sum(np.abs(gb.values - gb.values.mean()) ** 2) * grid.cell_volume
    tail = math.sqrt(ea * eb) / (2 * math.sqrt(lam_a * lam_b))
    return LhsResult(head + body, head, body, tail, times, vals)


def embedding_constants(pair: ConjugatePair, op_a, op_b):
    q = pair.quantities
    cp = c_p_constant(op_a.field, op_b.field, q.p)
    return cp, q.D


def embedding_rhs(pair: ConjugatePair, op_a, op_b, f, g, form: str = "homogeneous") -> float:
    """Right side of the embedding in homogeneous (norm) or dehomogenised (modular) form."""
    cp, dconst = embedding_constants(pair, op_a, op_b)
    vol = f.grid.cell_volume
    if form == "homogeneous":
        return 40 * cp * dconst * luxemburg_norm(pair.phi, f.values, vol) * luxemburg_norm(pair.psi, g.values, vol)
    if form == "dehomogenized":
        mod = np.sum(pair.phi(np.abs(f.values))) * vol + np.sum(pair.psi(np.abs(g.values))) * vol
        return 20 * cp * dconst * float(mod)
    raise ParameterError("form", form, "homogeneous or dehomogenized")


# ---------------------------------------------------------------------------
# heat flow
# ---------------------------------------------------------------------------


def energy(ctx: BellmanContext, f, g) -> float:
    p = profile(ctx, np.abs(f.values).ravel(), np.abs(g.values).ravel())
    return float(np.sum(p.value) * f.grid.cell_volume)


def energy_rate(ctx: BellmanContext, op_a, op_b, f, g) -> float:
    """``dE/dt`` by the chain rule along ``f' = -L_A f``, ``g' = -L_B g``."""
    du, dv = bellman_gradient(ctx, f.values.ravel(), g.values.ravel(), strict=False)
    fdot = -(op_a.matrix @ f.values.ravel())
    gdot = -(op_b.matrix @ g.values.ravel())
    rate = 2 * np.real(np.conj(du) * fdot + np.conj(dv) * gdot)
    return float(np.sum(rate) * f.grid.cell_volume)


@dataclass
class HeatFlowResult:
    times: np.ndarray
    energy: np.ndarray
    decay_rate: np.ndarray  # -E'(t)
    lower: np.ndarray
    margins: np.ndarray
    tolerance: float
    monotone: bool

    @property
    def passed(self) -> bool:
        return bool(np.all(self.margins >= -self.tolerance) and self.monotone)


def heat_flow_check(ctx: BellmanContext, op_a, op_b, f, g, times=(0.01, 0.05, 0.1, 0.5), rtol=1e-8):
    """Compare ``-E'(t)`` with the Hessian lower bound integrated over the grid."""
    times = np.sort(np.asarray(times, dtype=float))
    e0 = energy(ctx, f, g)
    traj = trajectories(op_a, op_b, f, g, times, rtol)
    coef = ctx.hessian_coefficient
    en, rate, low = [], [], []
    for fa, gb in zip(traj.f, traj.g):
        en.append(energy(ctx, fa, gb))
        rate.append(-energy_rate(ctx, op_a, op_b, fa, gb))
        low.append(coef * bilinear_integrand(fa, gb))
    en, rate, low = map(np.asarray, (en, rate, low))
    seq = np.concatenate([[e0], en])
    monotone = bool(np.all(np.diff(seq) <= 1e-12 * max(e0, 1e-300)))
    tol = 1e-6 * e0
    return HeatFlowResult(times, en, rate, low, rate - low, tol, monotone)


# ---------------------------------------------------------------------------
# end-to-end run
# ---------------------------------------------------------------------------


@dataclass
class EmbeddingRun:
    label: str
    grid: Grid
    lhs: float
    tail_bound: float
    rhs_homogeneous: float
    rhs_dehomogenized: float
    c_p: float
    D: float
    energy0: float
    heat_flow: HeatFlowResult | None = None
    timings: dict = field(default_factory=dict)
    torus_analogue: bool = True

    @property
    def lhs_upper(self) -> float:
        return self.lhs + self.tail_bound

    @property
    def margin_homogeneous(self) -> float:
        return self.rhs_homogeneous - self.lhs_upper

    @property
    def margin_dehomogenized(self) -> float:
        return self.rhs_dehomogenized - self.lhs_upper

    @property
    def passed(self) -> bool:
        ok = self.margin_homogeneous > 0 and self.margin_dehomogenized > 0
        if self.heat_flow is not None:
            ok = ok and self.heat_flow.passed
        return ok

    def to_dict(self, *, timings: bool = False) -> dict:
        out = {
            "label": self.label,
            "grid": {"d": self.grid.d, "N": self.grid.N, "length": self.grid.length},
            "lhs": self.lhs,
            "tail_bound": self.tail_bound,
            "rhs_homogeneous": self.rhs_homogeneous,
            "rhs_dehomogenized": self.rhs_dehomogenized,
            "margins": {
                "homogeneous": self.margin_homogeneous,
                "dehomogenized": self.margin_dehomogenized,
            },
            "c_p": self.c_p,
            "D": self.D,
            "energy0": self.energy0,
            "torus_analogue": self.torus_analogue,
            "passed": self.passed,
        }
        if self.heat_flow is not None:
            hf = self.heat_flow
            out["heat_flow"] = {
                "times": hf.times,
                "energy": hf.energy,
                "decay_rate": hf.decay_rate,
                "lower_bound": hf.lower,
                "margins": hf.margins,
                "tolerance": hf.tolerance,
                "monotone": hf.monotone,
                "passed": hf.passed,
            }
        if timings:
            out["timings"] = self.timings
        return out


def run_embedding(
    pair: ConjugatePair,
    a,
    b,
    f: GridFunction,
    g: GridFunction,
    *,
    t_max="auto",
    heat_times: Sequence[float] | None = (0.01, 0.05, 0.1, 0.5),
    label: str = "",
    rtol: float = 1e-8,
) -> EmbeddingRun:
    """Both sides of the embedding, plus the heat-flow check, for one configuration.

    Raises :class:`NonEllipticError` before any time stepping if either
    matrix fails p-ellipticity at ``p = M_tilde + 1``.
    """
    grid = f.grid
    a, b = as_field(a, "A"), as_field(b, "B")
    clock = time.perf_counter()
    op_a, op_b = assemble(a, grid), assemble(b, grid)
    cp, dconst = embedding_constants(pair, op_a, op_b)
    timings = {"assemble": time.perf_counter() - clock}
    clock = time.perf_counter()
    lhs = embedding_lhs(op_a, op_b, f, g, t_max, rtol=rtol)
    timings["lhs"] = time.perf_counter() - clock
    rhs_h = embedding_rhs(pair, op_a, op_b, f, g, "homogeneous")
    rhs_d = embedding_rhs(pair, op_a, op_b, f, g, "dehomogenized")
    ctx = BellmanContext.build(pair, op_a.field, op_b.field)
    e0 = energy(ctx, f, g)
    hf = None
    if heat_times:
        clock = time.perf_counter()
        hf = heat_flow_check(ctx, op_a, op_b, f, g, heat_times, rtol)
        timings["heat_flow"] = time.perf_counter() - clock
    return EmbeddingRun(label, grid, lhs.value, lhs.tail_bound, rhs_h, rhs_d, cp, dconst, e0, hf, timings)


def gaussian_bump(grid: Grid, center, width=1.0, amplitude=1.0, phase=0.0) -> GridFunction:
    """Periodised Gaussian ``amplitude e^{i phase} exp(-|x - center|^2 / (2 width^2))``."""
    center = np.broadcast_to(np.asarray(center, dtype=float), (grid.d,))
    r2 = np.zeros(grid.shape)
    for k, x in enumerate(grid.coordinates()):
        dx = (x - center[k] + grid.length / 2) % grid.length - grid.length / 2
        r2 += dx**2
    vals = amplitude * np.exp(1j * phase) * np.exp(-r2 / (2 * width**2))
    return GridFunction(vals, grid)


def fourier_mode(grid: Grid, k: Sequence[int], amplitude=1.0) -> GridFunction:
    """``amplitude exp(i 2 pi k.x / length)``."""
    phase = np.zeros(grid.shape)
    for kk, x in zip(np.broadcast_to(k, (grid.d,)), grid.coordinates()):
        phase += 2 * math.pi * kk * x / grid.length
    return GridFunction(amplitude * np.exp(1j * phase), grid)
