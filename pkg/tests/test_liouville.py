import math

import numpy as np
import pytest

from nodalheat.grid import integrate_disk, make_uniform_grid
from nodalheat.liouville import (
    ProfileKind,
    c1loc_distance,
    exp_z_star,
    liouville_mass,
    liouville_tail_bound,
    potential,
    rescaled_profile,
    z_star,
    z_star_derivative,
)
from nodalheat.shooting import stationary_solution


def test_z_star_solves_liouville():
    r = np.linspace(0.5, 10.0, 2001)
    h = r[1] - r[0]
    z = z_star(r)
    lap = (z[2:] - 2 * z[1:-1] + z[:-2]) / h ** 2 + (z[2:] - z[:-2]) / (2 * h) / r[1:-1]
    assert np.max(np.abs(-lap - np.exp(z[1:-1]))) < 1e-5
    assert z_star(0.0) == 0.0


def test_derivative_matches():
    r = np.linspace(0, 20, 401)
    h = 1e-6
    fd = (z_star(r + h) - z_star(np.abs(r - h))) / (2 * h)
    assert np.allclose(z_star_derivative(r[1:]), fd[1:], atol=1e-8)


@pytest.mark.parametrize("k, full", [(1, 8 * math.pi), (2, 8 * math.pi / 3), (3, 8 * math.pi / 5)])
def test_closed_form_masses(k, full):
    # antiderivative of 2 pi r (1 + r^2/8)^(-2k)
    R = 7.0
    F = lambda r: -8 * math.pi / (2 * k - 1) * (1 + r * r / 8) ** (1 - 2 * k)
    assert liouville_mass(R, k) == pytest.approx(F(R) - F(0), rel=1e-14)
    assert liouville_mass(1e8, k) == pytest.approx(full, rel=1e-12)
    g = make_uniform_grid(4001, R)
    assert integrate_disk(g, exp_z_star(g.nodes, k)) == pytest.approx(liouville_mass(R, k), rel=1e-9)


def test_tail_bound_dominates_tail():
    for R in (5.0, 20.0, 200.0):
        tail = 8 * math.pi - liouville_mass(R, 1)
        assert 0 < tail <= liouville_tail_bound(R)


@pytest.fixture(scope="module")
def sol100():
    return stationary_solution(100.0, 2)


def test_profiles(sol100):
    g = make_uniform_grid(501, 5.0)
    z = rescaled_profile(sol100, g)
    V = potential(sol100, g)
    assert z.kind is ProfileKind.Z_PROFILE and V.kind is ProfileKind.POTENTIAL
    assert z.values[0] == 0.0 and V.values[0] == pytest.approx(1.0)
    assert np.all(V.values <= 1.0) and np.all(V.values >= 0)
    assert np.max(np.abs(V.values - exp_z_star(g.nodes))) < 0.02
    assert z.evaluate(6.0) == 0.0


def test_c1loc_small_and_kind_checked(sol100):
    g = make_uniform_grid(2001, 5.0)
    gaps = c1loc_distance(rescaled_profile(sol100, g), 5.0)
    assert gaps["sup_value_gap"] < 0.01 and gaps["sup_derivative_gap"] < 0.01
    with pytest.raises(ValueError):
        c1loc_distance(potential(sol100, g), 5.0)
    with pytest.raises(ValueError):
        c1loc_distance(rescaled_profile(sol100, g), 6.0)


def test_domain_checked():
    sol = stationary_solution(3.0, 1)
    with pytest.raises(ValueError):
        rescaled_profile(sol, make_uniform_grid(11, 1e3))
