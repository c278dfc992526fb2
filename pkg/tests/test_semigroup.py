import math

import numpy as np
import pytest

from orlicz_bilinear import (
    BellmanContext,
    Grid,
    GridFunction,
    NonEllipticError,
    ParameterError,
    assemble,
    evolve,
    make_pair,
    run_embedding,
)
from orlicz_bilinear.config import parse_matrix, reference_random_pair, rotation
from orlicz_bilinear.ellipticity import lambda_min
from orlicz_bilinear.semigroup import (
    discrete_gradient,
    embedding_lhs,
    embedding_rhs,
    energy,
    evolve_exact,
    evolve_fourier,
    fourier_mode,
    gaussian_bump,
    gradient_magnitude,
    heat_flow_check,
    symbol,
)

POWER4 = make_pair("power:4")


def _random_function(grid, seed):
    rng = np.random.default_rng(seed)
    return GridFunction(rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape), grid)


def test_grid_validation():
    with pytest.raises(ParameterError):
        Grid(3, 16)
    with pytest.raises(ParameterError):
        Grid(1, 4)
    with pytest.raises(ParameterError):
        Grid(1, 16, 0.0)


def test_identity_stencil_in_one_dimension():
    grid = Grid(1, 8, 2.0)
    dense = assemble(np.eye(1), grid).dense()
    h2 = grid.h**2
    row = np.zeros(8)
    row[[0, 1, -1]] = [2.0, -1.0, -1.0]
    np.testing.assert_allclose(dense[0] * h2, row, atol=1e-14)
    for k in range(8):
        np.testing.assert_allclose(dense[k] * h2, np.roll(row, k), atol=1e-14)


@pytest.mark.parametrize("d", [1, 2])
def test_row_sums_vanish(d):
    grid = Grid(d, 12, 5.0)
    for spec in ("identity", "random", "rotation_field:0.4"):
        if spec == "random" and d == 1:
            continue
        op = assemble(parse_matrix(spec, d, grid=grid), grid)
        assert np.max(np.abs(np.asarray(op.matrix.sum(axis=1)))) <= 1e-12 / grid.h**2


def test_matches_fourier_symbol():
    grid = Grid(2, 16, 3.0)
    a, _ = reference_random_pair()
    op = assemble(a, grid)
    f = _random_function(grid, 0)
    via_symbol = np.fft.ifftn(symbol(a, grid) * np.fft.fftn(f.values))
    np.testing.assert_allclose(op.apply(f), via_symbol, atol=1e-12 * np.abs(via_symbol).max())


def test_discrete_accretivity():
    grid = Grid(1, 32, 4.0)
    field = parse_matrix("rotation_field:0.4", 1, grid=grid)
    op = assemble(field, grid)
    lam = lambda_min(op.field)
    for seed in range(5):
        f = _random_function(grid, seed)
        form = np.real(np.vdot(f.values.ravel(), op.apply(f).ravel()))
        grad2 = np.sum(np.abs(discrete_gradient(f)) ** 2)
        assert form >= lam * grad2 * (1 - 1e-12)


def test_non_elliptic_assembly():
    with pytest.raises(NonEllipticError):
        assemble(rotation(1.7, 1), Grid(1, 16))


def test_discrete_gradient_examples():
    grid = Grid(1, 16, 2.0)
    np.testing.assert_array_equal(discrete_gradient(GridFunction(np.full(16, 3.0 + 1j), grid)), 0.0)
    k = 3
    f = fourier_mode(grid, [k])
    wave = 2 * math.pi * k / grid.length
    np.testing.assert_allclose(gradient_magnitude(f), abs(np.exp(1j * grid.h * wave) - 1) / grid.h, rtol=1e-12)
    g = _random_function(grid, 1)
    np.testing.assert_allclose(discrete_gradient(f + g), discrete_gradient(f) + discrete_gradient(g), atol=1e-12)


def test_evolve_zero_time_and_constants():
    grid = Grid(2, 8, 1.0)
    op = assemble(reference_random_pair()[0], grid)
    f = _random_function(grid, 2)
    np.testing.assert_array_equal(evolve(op, f, 0.0).values, f.values)
    const = GridFunction(np.full(grid.shape, 2.0 - 1j), grid)
    np.testing.assert_array_equal(evolve(op, const, 0.3).values, const.values)
    with pytest.raises(ParameterError):
        evolve(op, f, -1.0)


def test_single_fourier_mode_decay():
    grid = Grid(1, 32, 2 * math.pi)
    op = assemble(np.eye(1), grid)
    f = fourier_mode(grid, [2])
    sigma = (2 - 2 * math.cos(grid.h * 2)) / grid.h**2
    # relative to the solution while it is still large, relative to the data after many e-folds
    for t in (0.01, 0.1):
        np.testing.assert_allclose(evolve(op, f, t).values, math.exp(-t * sigma) * f.values, rtol=1e-6)
    err = np.linalg.norm(evolve(op, f, 1.0).values - math.exp(-sigma) * f.values)
    assert err <= 1e-7 * f.norm() / math.sqrt(grid.cell_volume)


@pytest.mark.parametrize("matrix", [np.eye(1), rotation(0.3, 1), np.array([[1.3 + 0.4j]])])
def test_crank_nicolson_matches_oracles(matrix):
    grid = Grid(1, 32, 5.0)
    op = assemble(matrix, grid)
    f = gaussian_bump(grid, 2.5, 0.5)
    for t in (1e-3, 0.1, 2.0):
        cn = evolve(op, f, t).values
        exact = evolve_exact(op, f, t).values
        spectral = evolve_fourier(matrix, f, t).values
        scale = np.linalg.norm(exact)
        assert np.linalg.norm(cn - exact) <= 1e-6 * scale
        assert np.linalg.norm(spectral - exact) <= 1e-10 * scale


def test_semigroup_property_and_contraction():
    grid = Grid(1, 32, 5.0)
    op = assemble(parse_matrix("rotation_field:0.4", 1, grid=grid), grid)
    f = _random_function(grid, 3)
    s, t = 0.05, 0.3
    two_step = evolve(op, evolve(op, f, s), t).values
    one_step = evolve(op, f, s + t).values
    assert np.linalg.norm(two_step - one_step) <= 1e-7 * np.linalg.norm(one_step)
    norms = [evolve(op, f, t).norm() for t in (0.0, 0.01, 0.1, 1.0)]
    assert all(x >= y * (1 - 1e-12) for x, y in zip(norms, norms[1:]))


def test_lhs_trivial_cases():
    grid = Grid(1, 16, 4.0)
    op = assemble(np.eye(1), grid)
    f = gaussian_bump(grid, 2.0)
    zero = GridFunction(np.zeros(16), grid)
    const = GridFunction(np.ones(16), grid)
    assert embedding_lhs(op, op, zero, f).upper == 0.0
    assert embedding_lhs(op, op, f, const).upper == 0.0


def test_lhs_fourier_closed_form():
    grid = Grid(1, 32, 2 * math.pi)
    op = assemble(np.eye(1), grid)
    f = fourier_mode(grid, [1])
    sigma = (2 - 2 * math.cos(grid.h)) / grid.h**2
    grad2 = np.sum(gradient_magnitude(f) ** 2) * grid.cell_volume
    exact = grad2 / (2 * sigma)
    # the trapezoid rule overestimates the convex integrand; the error shrinks with the ratio
    coarse = embedding_lhs(op, op, f, f)
    fine = embedding_lhs(op, op, f, f, ratio=1.02)
    for res, rtol in ((coarse, 5e-3), (fine, 1e-4)):
        assert exact <= res.upper
        np.testing.assert_allclose(res.value, exact, rtol=rtol)
    assert abs(fine.value - exact) < abs(coarse.value - exact)


def test_rhs_factor_and_scaling():
    grid = Grid(1, 32, 6.0)
    op = assemble(np.eye(1), grid)
    f, g = gaussian_bump(grid, 3.0), gaussian_bump(grid, 2.5)
    from orlicz_bilinear import luxemburg_norm

    norms = luxemburg_norm(POWER4.phi, f) * luxemburg_norm(POWER4.psi, g)
    np.testing.assert_allclose(embedding_rhs(POWER4, op, op, f, g), 320 / 3 * norms, rtol=1e-11)
    np.testing.assert_allclose(
        embedding_rhs(POWER4, op, op, 2 * f, g), 2 * embedding_rhs(POWER4, op, op, f, g), rtol=1e-11
    )
    zero = GridFunction(np.zeros(32), grid)
    assert embedding_rhs(POWER4, op, op, zero, g) == 0.0
    with pytest.raises(ParameterError):
        embedding_rhs(POWER4, op, op, f, g, "other")


def test_heat_flow_chain_and_initial_energy_bound():
    grid = Grid(1, 64, 10.0)
    op = assemble(np.eye(1), grid)
    f, g = gaussian_bump(grid, 5.0), gaussian_bump(grid, 4.5)
    ctx = BellmanContext.build(POWER4, op.field, op.field)
    res = heat_flow_check(ctx, op, op, f, g)
    assert res.passed
    assert np.all(res.margins >= -1e-6 * energy(ctx, f, g))
    bound = POWER4.quantities.upper_factor * (
        np.sum(POWER4.phi(np.abs(f.values))) + np.sum(POWER4.psi(np.abs(g.values)))
    ) * grid.cell_volume
    assert energy(ctx, f, g) <= bound


def test_heat_flow_zero_data():
    grid = Grid(1, 16, 4.0)
    op = assemble(np.eye(1), grid)
    zero = GridFunction(np.zeros(16), grid)
    ctx = BellmanContext.build(POWER4, op.field, op.field)
    res = heat_flow_check(ctx, op, op, zero, zero)
    np.testing.assert_array_equal(res.energy, 0.0)
    np.testing.assert_array_equal(res.margins, 0.0)
    assert res.passed


def test_small_end_to_end_run():
    grid = Grid(1, 32, 10.0)
    f, g = gaussian_bump(grid, 5.0), gaussian_bump(grid, 4.5)
    run = run_embedding(make_pair("power_sum:4,3,0.5"), rotation(0.2, 1), rotation(-0.2, 1), f, g)
    assert run.passed
    assert run.margin_homogeneous > 0 and run.margin_dehomogenized > 0
    d = run.to_dict()
    assert "timings" not in d and d["passed"]


def test_end_to_end_refuses_non_elliptic_pair():
    grid = Grid(1, 16, 10.0)
    f = gaussian_bump(grid, 5.0)
    with pytest.raises(NonEllipticError):
        run_embedding(POWER4, rotation(1.5, 1), rotation(-1.5, 1), f, f)


def test_grid_refinement_is_stable():
    # bump centres on every grid, so the kinks of |grad f| stay on nodes
    lhs = []
    for n in (16, 32, 64, 128):
        grid = Grid(1, n, 10.0)
        op = assemble(np.eye(1), grid)
        lhs.append(embedding_lhs(op, op, gaussian_bump(grid, 5.0), gaussian_bump(grid, 4.375)).value)
    diffs = np.abs(np.diff(lhs))
    ratios = diffs[:-1] / diffs[1:]
    assert np.all((ratios > 1.5) & (ratios < 8.0))
