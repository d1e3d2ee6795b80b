import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nodalheat.acceptance import DISK_GROUND, linear_decay_rate
from nodalheat.evolution import (
    Classification,
    EvolutionControls,
    EvolutionOutcome,
    HeatState,
    evolve,
    evolve_classify,
    lambda_scan,
    scan_boundaries,
    step,
)
from nodalheat.grid import make_uniform_grid
from nodalheat.shooting import default_grid, stationary_solution


def test_zero_is_fixed_point(ws):
    sol = ws.solution(30.0, 2)
    zero = np.zeros(sol.grid.size)
    for reaction in (True, False):
        assert np.all(step(HeatState(sol.grid, zero), 1e-3, 30.0, reaction).values == 0.0)
    out = evolve(sol.grid, zero, 30.0)
    assert out.classification is Classification.GLOBAL_DECAY and out.supnorm_trace == [(0.0, 0.0)]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=41, max_size=41), st.floats(1e-6, 1.0))
def test_diffusion_does_not_raise_supnorm(vals, dt):
    g = make_uniform_grid(41, 1.0)
    v = np.array(vals)
    v[-1] = 0.0
    out = step(HeatState(g, v), dt, 3.0, reaction=False).values
    assert np.max(np.abs(out)) <= np.max(np.abs(v)) * (1 + 1e-12) + 1e-300


def test_linear_decay_rate():
    assert linear_decay_rate() == pytest.approx(DISK_GROUND, rel=0.02)


def test_stationary_drift_small():
    # u_{p,K} is an equilibrium: lambda = 1 must barely move over a short time
    grid = make_uniform_grid(801, 1.0)
    sol = stationary_solution(3.0, 2, grid)
    state = HeatState(grid, sol.values)
    dt = 1e-4
    for _ in range(100):
        state = step(state, dt, 3.0)
    h = grid.max_spacing
    drift = np.max(np.abs(state.values - sol.values))
    C = drift / (h * h + dt * dt)
    assert C < 1e3 * sol.amplitude ** 3


@pytest.mark.parametrize("p, lam, expected", [
    (30.0, 0.1, Classification.GLOBAL_DECAY),
    (30.0, 3.0, Classification.BLOWUP),
    (30.0, 1.01, Classification.BLOWUP),
    (30.0, 0.99, Classification.GLOBAL_DECAY),
])
def test_reference_verdicts(ws, p, lam, expected):
    out = evolve_classify(ws.solution(p, 2), lam)
    assert out.classification is expected
    if expected is Classification.BLOWUP:
        assert out.blowup_time_estimate >= out.final_time
        assert out.supnorm_trace[-1][1] >= 1e8


@pytest.mark.parametrize("p, lam", [(30.0, 0.1), (30.0, 3.0), (200.0, 1.01)])
def test_verdict_stable_under_refinement(ws, p, lam):
    sol = ws.solution(p, 2)
    coarse = evolve_classify(sol, lam)
    fine_grid = default_grid(sol.epsilon, 0.005)
    dt0 = math.exp(2 * math.log(fine_grid.nodes[1]) - math.log(8.0))
    fine = evolve_classify(sol, lam, EvolutionControls(dt_init=dt0), grid=fine_grid)
    assert fine.classification is coarse.classification


def test_controls_validated():
    g = make_uniform_grid(11, 1.0)
    for bad in (EvolutionControls(blowup_threshold=1e3), EvolutionControls(t_max=0), EvolutionControls(dt_init=-1.0)):
        with pytest.raises(ValueError):
            evolve(g, np.ones(11), 3.0, bad)


def test_short_horizon_is_undecided(ws):
    out = evolve_classify(ws.solution(30.0, 2), 0.5, EvolutionControls(t_max=1e-6))
    assert out.classification is Classification.UNDECIDED
    assert out.final_time == pytest.approx(1e-6)


def test_lambda_scan_order(ws):
    outs = lambda_scan(ws.solution(30.0, 2), [3.0, 0.1])
    assert [o.lam for o in outs] == [3.0, 0.1]
    with pytest.raises(ValueError):
        lambda_scan(ws.solution(30.0, 2), [math.nan])


def _o(lam, c):
    return EvolutionOutcome(c, lam, 0.0)


def test_scan_boundaries():
    D, B, U = Classification.GLOBAL_DECAY, Classification.BLOWUP, Classification.UNDECIDED
    outs = [_o(0.5, D), _o(0.9, D), _o(0.95, U), _o(0.99, B), _o(1.01, U), _o(1.05, B), _o(2.0, B)]
    b = scan_boundaries(outs)
    assert b["below_one"] == (0.9, 0.99)
    assert b["above_one"] == (1.01, 1.05)
    assert scan_boundaries([_o(0.5, D), _o(1.5, B)]) == {"below_one": None, "above_one": None}
