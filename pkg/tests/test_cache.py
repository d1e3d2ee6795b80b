import json
import logging
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor

import numpy as np
import pytest

from nodalheat import cache
from nodalheat.shooting import stationary_solution
from nodalheat.spectral import linearized_eigenpair


def _key(p=50.0, K=2, **kw):
    return cache.cache_key("stationary", p, K, "default:0.01", **kw)


def test_solution_round_trip(tmp_path):
    sol = stationary_solution(50.0, 2)
    cache.cache_store(_key(), sol, tmp_path)
    back = cache.cache_load(_key(), tmp_path)
    for name in ("values", "slopes", "nodal_radii"):
        assert np.array_equal(getattr(back, name), getattr(sol, name))
    assert back.amplitude == sol.amplitude and back.epsilon == sol.epsilon
    assert np.array_equal(back.grid.nodes, sol.grid.nodes)
    assert back.grid.signature == sol.grid.signature
    x = np.linspace(0, 1, 101)
    assert np.array_equal(back.evaluate(x)[0], sol.evaluate(x)[0])


def test_eigenpair_round_trip(tmp_path):
    pair = linearized_eigenpair(stationary_solution(20.0, 2))
    key = cache.cache_key("linearized", 20.0, 2, "default:0.01")
    cache.cache_store(key, pair, tmp_path)
    back = cache.cache_load(key, tmp_path)
    assert back.eigenvalue == pair.eigenvalue
    assert np.array_equal(back.eigenfunction, pair.eigenfunction)


def test_missing_and_schema_bump(tmp_path):
    sol = stationary_solution(3.0, 1)
    assert cache.cache_load(_key(3.0, 1), tmp_path) is None
    cache.cache_store(_key(3.0, 1), sol, tmp_path)
    bumped = _key(3.0, 1, schema_version=cache.SCHEMA_VERSION + 1)
    assert cache.cache_load(bumped, tmp_path) is None


def test_key_mismatch_is_miss(tmp_path):
    sol = stationary_solution(3.0, 1)
    path = cache.cache_store(_key(3.0, 1), sol, tmp_path)
    # plant the entry under another key's file name
    other = _key(3.0, 2)
    path.rename(tmp_path / f"{cache._digest(other)}.json")
    assert cache.cache_load(other, tmp_path) is None


def test_corrupt_file_is_miss(tmp_path, caplog):
    key = _key(3.0, 1)
    (tmp_path / f"{cache._digest(key)}.json").write_text("{not json")
    with caplog.at_level(logging.WARNING):
        assert cache.cache_load(key, tmp_path) is None
    assert "unreadable" in caplog.text


def test_environment_directory(tmp_path, monkeypatch):
    monkeypatch.setenv(cache.CACHE_ENV, str(tmp_path / "envcache"))
    assert cache.cache_dir() == tmp_path / "envcache"
    assert cache.cache_dir(tmp_path) == tmp_path


def test_unsupported_artifact(tmp_path):
    with pytest.raises(TypeError):
        cache.cache_store(_key(), object(), tmp_path)


def _store(args):
    directory, p = args
    sol = stationary_solution(p, 1)
    cache.cache_store(_key(p, 1), sol, directory)
    return sol.amplitude


@pytest.mark.parametrize("pool", [ThreadPoolExecutor, ProcessPoolExecutor])
def test_concurrent_writers(tmp_path, pool):
    ps = [3.0, 5.0, 7.0, 9.0]
    with pool(max_workers=4) as ex:
        amps = list(ex.map(_store, [(tmp_path, p) for p in ps]))
    for p, a in zip(ps, amps):
        assert cache.cache_load(_key(p, 1), tmp_path).amplitude == a
    assert not list(tmp_path.glob(".tmp-*"))


def test_same_key_writers_leave_valid_file(tmp_path):
    with ThreadPoolExecutor(max_workers=4) as ex:
        list(ex.map(_store, [(tmp_path, 3.0)] * 8))
    files = list(tmp_path.glob("*.json"))
    assert len(files) == 1
    json.loads(files[0].read_text())
