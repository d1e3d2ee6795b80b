import math

import pytest

from nodalheat.analysis import asymptotics_row, asymptotics_table, energy, limit_sign_value, sign_test
from nodalheat.shooting import stationary_solution
from nodalheat.spectral import linearized_eigenpair


@pytest.mark.parametrize("p, K", [(3.0, 1), (20.0, 2), (200.0, 3)])
def test_nehari_and_energy(ws, p, K):
    rep = energy(ws.solution(p, K))
    assert rep.nehari_relative <= 1e-6
    assert rep.energy_identity_relative <= 1e-8
    assert rep.E_p > 0


def test_energy_grows_with_nodes(ws):
    e = [energy(ws.solution(200.0, K)).E_p for K in (1, 2, 3)]
    assert e[0] < e[1] < e[2]


def test_sign_identity(ws):
    lim = ws.limit()
    rep = sign_test(ws.solution(200.0, 2), ws.eigenpair(200.0, 2), lim)
    assert rep.identity_relative <= 1e-4
    assert rep.integral_u_phi > 0
    assert rep.normalized_integral == pytest.approx(limit_sign_value(lim), rel=0.05)


def test_sign_test_needs_matching_grid(ws):
    other = stationary_solution(20.0, 2)
    with pytest.raises(ValueError):
        sign_test(ws.solution(50.0, 2), linearized_eigenpair(other), ws.limit())


def test_limit_sign_value(ws):
    value = limit_sign_value(ws.limit())
    assert 2.8 < value < 2.95


def test_row_fields(ws):
    row = asymptotics_row(50.0, 2, ws.limit())
    assert row["p"] == 50.0 and row["K"] == 2
    assert row["M2_over_M1"] < 1 and row["r1_over_eps"] > 1
    assert row["lambda1_tilde"] == pytest.approx(row["lambda1_star"], abs=0.01)
    k1 = asymptotics_row(50.0, 1, ws.limit())
    assert math.isnan(k1["M2_over_M1"])


def test_table_rejects_bad_p():
    with pytest.raises(ValueError):
        asymptotics_table(2, [1.0])


def test_table_parallel_matches_serial():
    serial = asymptotics_table(2, [20.0, 30.0], workers=1, node_count=4001)
    parallel = asymptotics_table(2, [20.0, 30.0], workers=2, node_count=4001)
    assert serial == parallel
