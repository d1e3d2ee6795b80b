"""On-disk JSON cache for stationary solutions and eigenpairs.

Keys are dictionaries (p, K, grid descriptor, schema version, ...) hashed to
a file name; the key is stored alongside the payload and compared on load,
so a hash collision or a schema bump reads as a miss. Floats are written
with ``repr`` precision, which round-trips exactly. Writes go to a temporary
file in the same directory followed by an atomic rename.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path

import numpy as np

from .grid import RadialGrid, make_graded_grid, make_uniform_grid
from .shooting import LaneEmdenTrajectory, StationarySolution
from .spectral import EigenPair

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CACHE_ENV = "NODALHEAT_CACHE"

__all__ = ["SCHEMA_VERSION", "CACHE_ENV", "cache_dir", "cache_key", "cache_store", "cache_load"]


def cache_dir(explicit: str | os.PathLike | None = None) -> Path:
    """``explicit``, else ``$NODALHEAT_CACHE``, else ``./.nodalheat-cache``."""
    base = explicit or os.environ.get(CACHE_ENV) or ".nodalheat-cache"
    return Path(base)


def cache_key(kind: str, p: float, K: int, grid: str, schema_version: int = SCHEMA_VERSION, **extra) -> dict:
    key = {"kind": kind, "p": float(p), "K": int(K), "grid": grid, "schema_version": int(schema_version)}
    key.update(extra)
    return key


def _digest(key: dict) -> str:
    blob = json.dumps(key, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:32]


def _grid_to_dict(grid: RadialGrid) -> dict:
    d = {"kind": grid.kind, "outer_radius": grid.outer_radius, "size": grid.size, "core_scale": grid.core_scale}
    if grid.kind not in ("uniform", "graded"):
        d["nodes"] = grid.nodes.tolist()
        d["weights"] = grid.quadrature_weights.tolist()
    return d


def _grid_from_dict(d: dict) -> RadialGrid:
    if d["kind"] == "uniform":
        return make_uniform_grid(d["size"], d["outer_radius"])
    if d["kind"] == "graded":
        return make_graded_grid(d["size"], d["outer_radius"], d["core_scale"])
    return RadialGrid(np.array(d["nodes"]), d["outer_radius"], np.array(d["weights"]), kind=d["kind"])


def _encode(artifact) -> dict:
    if isinstance(artifact, StationarySolution):
        tr = artifact.trajectory
        return {
            "type": "StationarySolution",
            "p": artifact.p,
            "K": artifact.K,
            "grid": _grid_to_dict(artifact.grid),
            "values": artifact.values.tolist(),
            "slopes": artifact.slopes.tolist(),
            "nodal_radii": artifact.nodal_radii.tolist(),
            "amplitude": artifact.amplitude,
            "epsilon": artifact.epsilon,
            "trajectory": {
                "p": tr.p,
                "t": tr.t.tolist(),
                "y": tr.y.tolist(),
                "q": tr.q.tolist(),
                "log_zeros": tr.log_zeros.tolist(),
            },
        }
    if isinstance(artifact, EigenPair):
        return {
            "type": "EigenPair",
            "eigenvalue": artifact.eigenvalue,
            "eigenfunction": artifact.eigenfunction.tolist(),
            "grid": _grid_to_dict(artifact.grid),
            "residual": artifact.residual,
            "iterations": artifact.iterations,
        }
    raise TypeError(f"cannot cache {type(artifact).__name__}")


def _decode(d: dict):
    if d["type"] == "StationarySolution":
        tr = d["trajectory"]
        traj = LaneEmdenTrajectory(tr["p"], np.array(tr["t"]), np.array(tr["y"]), np.array(tr["q"]),
                                   np.array(tr["log_zeros"]))
        return StationarySolution(
            p=d["p"], K=d["K"], grid=_grid_from_dict(d["grid"]), values=np.array(d["values"]),
            slopes=np.array(d["slopes"]), nodal_radii=np.array(d["nodal_radii"]),
            amplitude=d["amplitude"], epsilon=d["epsilon"], trajectory=traj,
        )
    if d["type"] == "EigenPair":
        return EigenPair(d["eigenvalue"], np.array(d["eigenfunction"]), _grid_from_dict(d["grid"]),
                         residual=d["residual"], iterations=d["iterations"])
    raise ValueError(f"unknown artifact type {d['type']!r}")


def cache_store(key: dict, artifact, directory: str | os.PathLike | None = None) -> Path:
    """Write ``artifact`` under ``key``; returns the file path."""
    root = cache_dir(directory)
    root.mkdir(parents=True, exist_ok=True)
    path = root / f"{_digest(key)}.json"
    payload = json.dumps({"key": key, "artifact": _encode(artifact)})
    fd, tmp = tempfile.mkstemp(dir=root, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def cache_load(key: dict, directory: str | os.PathLike | None = None):
    """Artifact stored under ``key`` or ``None`` on a miss."""
    path = cache_dir(directory) / f"{_digest(key)}.json"
    if not path.exists():
        return None
    try:
        with open(path) as fh:
            doc = json.load(fh)
        if doc.get("key") != key:
            return None
        return _decode(doc["artifact"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        log.warning("ignoring unreadable cache entry %s: %s", path, exc)
        return None
