"""Parsing of family, matrix, grid and run records from JSON-like data."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .ellipticity import MatrixField, delta_p
from .errors import ConfigError, OrliczError
from .semigroup import Grid, GridFunction, gaussian_bump
from .young import make_pair, parse_family

REFERENCE_FAMILIES = (
    "power:4",
    "zygmund:3",
    "power_sum:4,3,1",
    "power_sum:4,3,0.01",
    "dual_power_sum:1.5,1.8",
)
REFERENCE_SEED = 20240607


def rotation(phi: float, d: int) -> np.ndarray:
    return np.exp(1j * phi) * np.eye(d)


def random_elliptic(rng, d: int, *, p: float = 2.0, imag_scale: float = 0.5, tries: int = 1000) -> np.ndarray:
    """Random complex matrix with positive Hermitian part and ``Delta_p > 0``.

    The real part is symmetric with eigenvalues in [1, 2]; the imaginary
    part is a scaled Gaussian matrix.  Draws are repeated until the
    requested p-ellipticity holds.
    """
    for _ in range(tries):
        q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        re = q @ np.diag(rng.uniform(1, 2, d)) @ q.T
        im = imag_scale * rng.standard_normal((d, d))
        a = re + 0.2 * rng.standard_normal((d, d)) + 1j * im
        if delta_p(MatrixField(a), p) > 0:
            return a
    raise ConfigError(f"no {d}x{d} matrix with Delta_{p:g} > 0 found in {tries} draws")


def reference_random_pair(d: int = 2, seed: int = REFERENCE_SEED, p: float = 4.0):
    rng = np.random.default_rng(seed)
    return random_elliptic(rng, d, p=p), random_elliptic(rng, d, p=p)


def _field_on_grid(spec: dict, d: int, grid: Grid | None) -> np.ndarray:
    if grid is None:
        raise ConfigError("rotation_field needs a grid")
    phi = float(spec.get("phi", 0.2))
    amp = float(spec.get("amplitude", 0.5))
    x = grid.coordinates()[0]
    w = 2 * math.pi * x / grid.length
    scalar = (1 + amp * np.sin(w)) * np.exp(1j * phi * np.cos(w))
    return scalar[..., None, None] * np.eye(d)


def parse_matrix(spec: Any, d: int, *, name: str = "A", grid: Grid | None = None, conjugate: bool = False) -> MatrixField:
    """Build a :class:`MatrixField` from a record or shorthand string.

    Strings: ``"identity"``, ``"rotation:PHI"``, ``"random:SEED"``.  Records
    ``{"re": ..., "im": ...}`` or ``{"kind": ...}`` with kinds identity,
    rotation, random and rotation_field.  ``conjugate`` negates the rotation
    angle, for building ``B`` from the same record as ``A``.
    """
    if isinstance(spec, str):
        kind, _, arg = spec.partition(":")
        spec = {"kind": kind}
        if kind == "rotation":
            spec["phi"] = float(arg or 0.2)
        elif kind == "random":
            spec["seed"] = int(arg or REFERENCE_SEED)
        elif kind == "rotation_field":
            spec["phi"] = float(arg or 0.2)
    if not isinstance(spec, dict):
        raise ConfigError(f"matrix spec for {name} must be a string or an object, got {type(spec).__name__}")
    d = int(spec.get("d", d))
    try:
        if "re" in spec or "im" in spec:
            re = np.asarray(spec.get("re", 0.0), dtype=float)
            im = np.asarray(spec.get("im", 0.0), dtype=float)
            vals = re + 1j * im
            if vals.ndim == 0:
                vals = vals * np.eye(d)
            return MatrixField(vals, name)
        kind = spec.get("kind", "identity")
        sign = -1.0 if conjugate else 1.0
        if kind == "identity":
            return MatrixField(np.eye(d, dtype=complex), name)
        if kind == "rotation":
            return MatrixField(rotation(sign * float(spec.get("phi", 0.2)), d), name)
        if kind == "random":
            seed = int(spec.get("seed", REFERENCE_SEED))
            a, b = reference_random_pair(d, seed, float(spec.get("p", 4.0)))
            return MatrixField(b if conjugate else a, name)
        if kind == "rotation_field":
            vals = _field_on_grid({**spec, "phi": sign * float(spec.get("phi", 0.2))}, d, grid)
            return MatrixField(vals, name)
    except OrliczError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad matrix spec for {name}: {exc}") from exc
    raise ConfigError(f"unknown matrix kind {kind!r} for {name}")


def parse_grid(spec: Any) -> Grid:
    if isinstance(spec, Grid):
        return spec
    if not isinstance(spec, dict):
        raise ConfigError("grid must be an object {d, N, length}")
    try:
        return Grid(int(spec.get("d", 1)), int(spec.get("N", 64)), float(spec.get("length", 10.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad grid: {exc}") from exc


def _bump(grid: Grid, rec: dict, default_center: float) -> GridFunction:
    kind = rec.get("kind", "gaussian-bump")
    if kind != "gaussian-bump":
        raise ConfigError(f"unknown data kind {kind!r}")
    return gaussian_bump(
        grid,
        rec.get("center", default_center),
        float(rec.get("width", 1.0)),
        float(rec.get("amplitude", 1.0)),
        float(rec.get("phase", 0.0)),
    )


def parse_data(spec: Any, grid: Grid) -> tuple[GridFunction, GridFunction]:
    """Initial data ``(f, g)``; by default bumps centred at ``L/2`` and ``L/2 - 0.5``."""
    spec = spec or {}
    if not isinstance(spec, dict):
        raise ConfigError("data must be an object")
    mid = grid.length / 2
    if "f" in spec or "g" in spec:
        return _bump(grid, spec.get("f", {}), mid), _bump(grid, spec.get("g", {}), mid - 0.5)
    centers = spec.get("center", [mid, mid - 0.5])
    if np.ndim(centers) == 0:
        centers = [centers, centers]
    base = {k: v for k, v in spec.items() if k != "center"}
    return _bump(grid, {**base, "center": centers[0]}, mid), _bump(grid, {**base, "center": centers[1]}, mid)


@dataclass
class RunConfig:
    young: Any
    grid: Grid
    a: Any = "identity"
    b: Any = None
    data: dict = field(default_factory=dict)
    t_max: Any = "auto"
    heat_times: tuple = (0.01, 0.05, 0.1, 0.5)
    samples: int | None = None
    seed: int = 0
    label: str = ""

    def build(self):
        """Return ``(pair, A, B, f, g)``."""
        pair = make_pair(self.young)
        a = parse_matrix(self.a, self.grid.d, name="A", grid=self.grid)
        b_spec = self.b if self.b is not None else self.a
        b = parse_matrix(b_spec, self.grid.d, name="B", grid=self.grid, conjugate=self.b is None)
        f, g = parse_data(self.data, self.grid)
        return pair, a, b, f, g


def parse_run(obj: dict) -> RunConfig:
    if not isinstance(obj, dict):
        raise ConfigError("run config must be a JSON object")
    if "young" not in obj:
        raise ConfigError("run config needs a 'young' family record")
    parse_family(obj["young"])
    t_max = obj.get("T_max", "auto")
    if t_max != "auto":
        try:
            t_max = float(t_max)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"T_max must be 'auto' or a number: {exc}") from exc
    rc = RunConfig(
        young=obj["young"],
        grid=parse_grid(obj.get("grid", {})),
        a=obj.get("A", "identity"),
        b=obj.get("B"),
        data=obj.get("data", {}),
        t_max=t_max,
        heat_times=tuple(obj.get("heat_times", (0.01, 0.05, 0.1, 0.5))),
        samples=obj.get("samples"),
        seed=int(obj.get("seed", 0)),
        label=str(obj.get("label", "")),
    )
    if not rc.label:
        young = obj["young"] if isinstance(obj["young"], str) else json.dumps(obj["young"], sort_keys=True)
        rc.label = f"{young}|d{rc.grid.d}N{rc.grid.N}"
    return rc


def load_run(path) -> RunConfig:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read run config {path}: {exc}") from exc
    return parse_run(obj)


def reference_runs(grids=((1, 64), (1, 128), (2, 32)), families=REFERENCE_FAMILIES, length: float = 10.0):
    """The reference matrix of end-to-end runs (random pair only in two dimensions)."""
    runs = []
    for d, n in grids:
        grid = Grid(d, n, length)
        pairs = [("identity", "I"), ({"kind": "rotation", "phi": 0.2}, "rot0.2")]
        if d == 2:
            pairs.append(({"kind": "random"}, "random"))
        for fam in families:
            for a, tag in pairs:
                runs.append(RunConfig(fam, grid, a, None, label=f"{fam}|{tag}|d{d}N{n}"))
    return runs
