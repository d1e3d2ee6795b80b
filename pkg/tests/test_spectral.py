import math

import numpy as np
import pytest

from nodalheat.grid import integrate_disk, make_graded_grid, make_uniform_grid
from nodalheat.liouville import exp_z_star
from nodalheat.spectral import (
    SolverFailure,
    assemble,
    eigenvalue_count,
    first_eigenpair,
    limit_eigenpair,
    linearized_eigenpair,
    rayleigh,
    rescaled_eigenfunction,
    rescaled_eigenvalue,
    rescaled_operator_eigenpair,
)


def j0(x):
    """Bessel J0 by its power series (fine for x < 10)."""
    term, total, k = 1.0, 1.0, 0
    while abs(term) > 1e-18:
        k += 1
        term *= -(x * x / 4) / (k * k)
        total += term
    return total


def first_j0_zero():
    lo, hi = 2.0, 3.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if j0(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


BESSEL_GROUND = 5.783185962946784


def test_bessel_oracle():
    assert first_j0_zero() ** 2 == pytest.approx(BESSEL_GROUND, rel=1e-14)


@pytest.mark.parametrize("grid", [make_uniform_grid(4001, 1.0), make_graded_grid(4001, 1.0, 0.3)])
def test_disk_ground_state(grid):
    pair = first_eigenpair(assemble(grid, np.zeros(grid.size)))
    assert abs(pair.eigenvalue - BESSEL_GROUND) < 1e-4
    assert pair.eigenfunction[-1] == 0.0 and np.all(pair.eigenfunction >= 0)
    assert integrate_disk(grid, pair.eigenfunction ** 2) == pytest.approx(1.0, rel=1e-12)
    expected = np.array([j0(math.sqrt(BESSEL_GROUND) * r) for r in grid.nodes])
    expected /= math.sqrt(integrate_disk(grid, expected ** 2))
    assert np.max(np.abs(pair.eigenfunction - expected)) < 1e-5


def test_scaled_disk():
    # radius 2 divides the ground energy by 4
    g = make_uniform_grid(4001, 2.0)
    assert first_eigenpair(assemble(g, np.zeros(g.size))).eigenvalue == pytest.approx(BESSEL_GROUND / 4, rel=1e-6)


def test_constant_potential_shift():
    g = make_uniform_grid(2001, 1.0)
    base = first_eigenpair(assemble(g, np.zeros(g.size))).eigenvalue
    shifted = first_eigenpair(assemble(g, np.full(g.size, 3.0))).eigenvalue
    assert shifted == pytest.approx(base - 3.0, rel=1e-10)


def test_sturm_count():
    g = make_uniform_grid(801, 1.0)
    op = assemble(g, np.zeros(g.size))
    assert eigenvalue_count(op, 5.0) == 0
    assert eigenvalue_count(op, 6.0) == 1
    # second radial eigenvalue j_{0,2}^2 = 30.4713
    assert eigenvalue_count(op, 30.0) == 1 and eigenvalue_count(op, 31.0) == 2


def test_potential_length_checked():
    g = make_uniform_grid(11, 1.0)
    with pytest.raises(ValueError):
        assemble(g, np.zeros(10))


def test_residual_gate():
    g = make_uniform_grid(201, 1.0)
    with pytest.raises(SolverFailure):
        first_eigenpair(assemble(g, np.zeros(g.size)), max_iterations=1)


@pytest.fixture(scope="module")
def star():
    return limit_eigenpair(40.0, 8001)


def test_limit_eigenvalue(star):
    # Rayleigh quotient of e^{z*}: (-4 pi/5)/(8 pi/3) = -3/10
    assert star.eigenvalue <= -0.3
    assert star.eigenvalue == pytest.approx(-0.3181443, abs=2e-6)
    assert limit_eigenpair(80.0, 16001).eigenvalue == pytest.approx(star.eigenvalue, abs=1e-6)


def test_limit_requires_radius():
    with pytest.raises(ValueError):
        limit_eigenpair(10.0)


def test_rayleigh_bounds_eigenvalue(star):
    g = star.grid
    W = exp_z_star(g.nodes)
    assert rayleigh(star.eigenfunction, W, g) == pytest.approx(star.eigenvalue, abs=1e-4)
    trial = exp_z_star(g.nodes)
    trial /= math.sqrt(integrate_disk(g, trial ** 2))
    assert rayleigh(trial, W, g) >= star.eigenvalue


def test_linearized_routes_agree(ws):
    sol = ws.solution(100.0, 2)
    pair = ws.eigenpair(100.0, 2)
    assert pair.eigenvalue < 0
    via_scaling = rescaled_eigenvalue(sol, pair)
    direct = rescaled_operator_eigenpair(sol).eigenvalue
    assert abs(via_scaling - direct) <= 1e-4 * abs(direct)


def test_rescaled_eigenfunction_near_limit(ws, star):
    sol = ws.solution(200.0, 2)
    prof = rescaled_eigenfunction(sol, ws.eigenpair(200.0, 2), star.grid)
    assert np.all(prof.values >= 0)
    assert integrate_disk(star.grid, prof.values ** 2) == pytest.approx(1.0, abs=1e-8)
    diff = prof.values - star.eigenfunction
    assert math.sqrt(integrate_disk(star.grid, diff ** 2)) < 1e-3


def test_positive_solution_has_one_negative_direction(ws):
    pair = linearized_eigenpair(ws.solution(20.0, 1))
    assert pair.eigenvalue < 0 and np.all(pair.eigenfunction >= 0)
