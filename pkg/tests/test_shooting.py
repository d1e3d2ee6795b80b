import math

import numpy as np
import pytest

from nodalheat.shooting import (
    NoConvergenceError,
    StepControl,
    epsilon_of,
    integrate_lane_emden,
    local_maxima,
    stationary_solution,
)
from nodalheat.grid import make_uniform_grid

# First zero of w'' + w'/r + |w|^2 w = 0, w(0)=1, from the fixed-step RK4 below at h = 1e-6.
FIRST_ZERO_P3 = 3.573900982099136


def first_zero_rk4(p, h):
    """Independent oracle: classical RK4 in r from the series start, cubic Hermite root."""
    r = h
    w = 1.0 - r * r / 4.0
    v = -r / 2.0

    def f(r, w, v):
        return v, -v / r - math.copysign(abs(w) ** p, w)

    while True:
        k1w, k1v = f(r, w, v)
        k2w, k2v = f(r + h / 2, w + h / 2 * k1w, v + h / 2 * k1v)
        k3w, k3v = f(r + h / 2, w + h / 2 * k2w, v + h / 2 * k2v)
        k4w, k4v = f(r + h, w + h * k3w, v + h * k3v)
        wn = w + h / 6 * (k1w + 2 * k2w + 2 * k3w + k4w)
        vn = v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if wn <= 0:
            lo, hi = 0.0, 1.0
            for _ in range(80):
                x = 0.5 * (lo + hi)
                h00 = 2 * x ** 3 - 3 * x ** 2 + 1
                h10 = x ** 3 - 2 * x ** 2 + x
                h01 = -2 * x ** 3 + 3 * x ** 2
                h11 = x ** 3 - x ** 2
                if h00 * w + h10 * h * v + h01 * wn + h11 * h * vn > 0:
                    lo = x
                else:
                    hi = x
            return r + 0.5 * (lo + hi) * h
        r += h
        w, v = wn, vn


def test_oracle_is_converged():
    assert first_zero_rk4(3.0, 1e-3) == pytest.approx(FIRST_ZERO_P3, rel=1e-8)


def test_first_zero_matches_oracle():
    traj = integrate_lane_emden(3.0, 1)
    assert traj.zeros[0] == pytest.approx(FIRST_ZERO_P3, rel=1e-9)


def test_unit_boundary_and_amplitude():
    sol = stationary_solution(3.0, 2)
    assert sol.values[-1] == 0.0
    assert abs(sol.evaluate(1.0)[0]) < 1e-10
    assert sol.amplitude == pytest.approx(sol.outer_zero ** (2.0 / (3.0 - 1.0)), rel=1e-13)
    assert sol.values[0] == pytest.approx(sol.amplitude, rel=1e-12)


@pytest.mark.parametrize("p, K", [(3.0, 1), (3.0, 3), (20.0, 2), (200.0, 3)])
def test_nodal_structure(p, K):
    sol = stationary_solution(p, K)
    inner = sol.values[:-1]
    changes = np.count_nonzero(np.diff(np.sign(inner[inner != 0])))
    assert changes == K - 1
    assert sol.nodal_radii.size == K - 1
    assert np.all(np.diff(sol.nodal_radii) > 0) and np.all(sol.nodal_radii < 1)
    for r in sol.nodal_radii:
        assert abs(sol.evaluate(r)[0]) < 1e-8 * sol.amplitude


def test_ode_residual_uniform_grid():
    grid = make_uniform_grid(4001, 1.0)
    sol = stationary_solution(3.0, 2, grid)
    r, u, du = grid.nodes, sol.values, sol.slopes
    h = r[1] - r[0]
    # u' is odd in r: extend it across the origin for the stencils below
    ext = np.concatenate((-du[2:0:-1], du))
    nodes = np.arange(1, r.size - 2)  # node i sits at ext[i + 2]
    d2u = (ext[nodes + 3] - ext[nodes + 1]) / (2 * h)
    res = d2u + du[nodes] / r[nodes] + np.abs(u[nodes]) ** 2 * u[nodes]
    # central-difference truncation h^2/6 |u|, with u from a five-point stencil on u'
    d3 = np.abs(ext[nodes + 4] - 2 * ext[nodes + 3] + 2 * ext[nodes + 1] - ext[nodes]) / (2 * h ** 3)
    estimate = h * h / 6 * d3
    assert np.all(np.abs(res) <= 10 * estimate + 1e-9)


def test_epsilon_consistent():
    sol = stationary_solution(50.0, 2)
    eps = (50.0 * sol.amplitude ** 49) ** -0.5
    assert epsilon_of(sol) == pytest.approx(eps, rel=1e-10)
    assert sol.epsilon == pytest.approx(eps, rel=1e-10)
    # rho_K * eps = p^(-1/2)
    assert sol.outer_zero * sol.epsilon == pytest.approx(50.0 ** -0.5, rel=1e-10)


def test_rescaled_profile_independent_of_K():
    x = np.linspace(0, 5, 11)
    a = stationary_solution(50.0, 1).normalized_at_rescaled(x)[0]
    b = stationary_solution(50.0, 3).normalized_at_rescaled(x)[0]
    assert np.array_equal(a, b)


def test_local_maxima_decrease():
    m = local_maxima(stationary_solution(20.0, 3))
    assert m.size == 3 and np.all(np.diff(m) < 0)


def test_invalid_K():
    with pytest.raises(ValueError):
        stationary_solution(3.0, 0)


def test_non_unit_grid_rejected():
    with pytest.raises(ValueError):
        stationary_solution(3.0, 1, make_uniform_grid(11, 2.0))


def test_step_budget_exhausted():
    with pytest.raises(NoConvergenceError):
        integrate_lane_emden(3.0, 5, StepControl(max_steps=10))
