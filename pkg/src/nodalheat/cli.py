"""Command-line entry point: ``nodalheat <command> [options]``.

Every run writes a JSON summary (``<command>.json``, carrying the config
echo) and, where there is tabular output, CSV files into ``--out``. Exit
codes: 0 success, 1 invalid input or failed verification, 2 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cache
from .acceptance import CRITERIA, Workspace
from .analysis import asymptotics_table, energy, sign_test
from .evolution import EvolutionControls, StepRejected, evolve_classify, scan_boundaries
from .grid import make_uniform_grid
from .liouville import c1loc_distance, exp_z_star, potential, rescaled_profile, z_star
from .shooting import NoConvergenceError, local_maxima
from .spectral import SolverFailure, rescaled_eigenvalue

log = logging.getLogger("nodalheat")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 1, 2


class ValidationError(ValueError):
    """Bad command line or configuration."""


# option names accepted by each command, beyond the shared ones
_SHARED = {"out", "cache_dir", "no_cache", "config", "verbose"}
_KEYS = {
    "stationary": {"p", "K", "step"},
    "spectrum": {"p", "K", "limit", "R", "nodes"},
    "liouville": {"p", "K", "compare_radius", "nodes"},
    "energy": {"p", "K"},
    "signtest": {"p", "K", "R", "nodes"},
    "evolve": {"p", "K", "lam", "t_max", "dt_init", "blowup_threshold", "decay_threshold", "dt_floor", "rtol",
               "max_steps"},
    "scan": {"p", "K", "lams", "t_max", "workers"},
    "asymptotics": {"K", "p_list", "R", "nodes", "workers"},
    "verify": {"only", "skip_borderline"},
}


@dataclass(frozen=True)
class RunConfig:
    """Validated parameters of one run."""

    command: str
    params: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_mapping(cls, command: str, mapping: dict) -> "RunConfig":
        if command not in _KEYS:
            raise ValidationError(f"unknown command {command!r}")
        mapping = dict(mapping)
        version = mapping.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValidationError(f"schema_version {version} is not supported (expected {SCHEMA_VERSION})")
        unknown = set(mapping) - _KEYS[command]
        if unknown:
            raise ValidationError(f"unknown keys for {command}: {sorted(unknown)}")
        cfg = cls(command, mapping, version)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        q = self.params

        def need(name, ok, msg):
            if name in q and q[name] is not None and not ok(q[name]):
                raise ValidationError(f"{name} {msg}, got {q[name]!r}")

        need("p", lambda v: v > 1 and math.isfinite(v), "must be a finite number > 1")
        need("K", lambda v: v >= 1, "must be >= 1")
        need("step", lambda v: 0 < v <= 0.1, "must lie in (0, 0.1]")
        need("R", lambda v: v >= 20, "must be >= 20")
        need("nodes", lambda v: v >= 3, "must be >= 3")
        need("compare_radius", lambda v: v > 0, "must be positive")
        need("lam", math.isfinite, "must be finite")
        need("lams", lambda v: len(v) > 0 and all(map(math.isfinite, v)), "must be a nonempty list of finite values")
        need("p_list", lambda v: len(v) > 0 and all(x > 1 for x in v), "must be a nonempty list of values > 1")
        need("workers", lambda v: v >= 1, "must be >= 1")
        need("only", lambda v: all(n in CRITERIA for n in v), f"must be criteria among {sorted(CRITERIA)}")
        if self.command in ("stationary", "liouville", "energy", "signtest", "evolve", "scan"):
            for name in ("p", "K"):
                if q.get(name) is None:
                    raise ValidationError(f"{self.command} needs --{name}")
        if self.command == "spectrum" and not q.get("limit") and (q.get("p") is None or q.get("K") is None):
            raise ValidationError("spectrum needs --limit or both --p and --K")
        if self.command == "evolve":
            try:
                self.controls().validate()
            except ValueError as exc:
                raise ValidationError(str(exc)) from exc

    def controls(self) -> EvolutionControls:
        names = ("t_max", "dt_init", "blowup_threshold", "decay_threshold", "dt_floor", "rtol", "max_steps")
        return EvolutionControls(**{k: self.params[k] for k in names if self.params.get(k) is not None})

    def echo(self) -> dict:
        return {"command": self.command, "schema_version": self.schema_version, **self.params}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nodalheat", description="Nodal Lane-Emden solutions and nonlinear heat flow on the disk.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--out", default="nodalheat-out", help="output directory (default: %(default)s)")
        sp.add_argument("--cache-dir", default=None, help=f"cache directory (default: ${cache.CACHE_ENV} or .nodalheat-cache)")
        sp.add_argument("--no-cache", action="store_true", help="neither read nor write the cache")
        sp.add_argument("--config", default=None, help="JSON file of parameters; command-line flags override it")
        sp.add_argument("-v", "--verbose", action="store_true")
        return sp

    def pk(sp, required=False):
        sp.add_argument("--p", type=float, default=None, required=False)
        sp.add_argument("--K", type=int, default=None, required=False)

    sp = command("stationary", "compute and cache u_{p,K}")
    pk(sp)
    sp.add_argument("--step", type=float, default=None, help="graded-grid parameter step (default 0.01)")

    sp = command("spectrum", "first eigenpair of the linearized or limit operator")
    pk(sp)
    sp.add_argument("--limit", action="store_true", help="solve -Delta - e^{z*} instead")
    sp.add_argument("--R", type=float, default=None, help="truncation radius for --limit (default 40)")
    sp.add_argument("--nodes", type=int, default=None, help="node count for --limit (default 200 R + 1)")

    sp = command("liouville", "rescaled profile and potential against the Liouville limit")
    pk(sp)
    sp.add_argument("--compare-radius", type=float, default=None)
    sp.add_argument("--nodes", type=int, default=None)

    sp = command("energy", "energy, Dirichlet integral and Nehari gap")
    pk(sp)

    sp = command("signtest", "int u phi_1, the identity residual and the scaled limit")
    pk(sp)
    sp.add_argument("--R", type=float, default=None)
    sp.add_argument("--nodes", type=int, default=None)

    sp = command("evolve", "evolve lam * u_{p,K} and classify")
    pk(sp)
    sp.add_argument("--lam", type=float, default=None)
    for name, kind in (("t-max", float), ("dt-init", float), ("blowup-threshold", float),
                       ("decay-threshold", float), ("dt-floor", float), ("rtol", float), ("max-steps", int)):
        sp.add_argument(f"--{name}", type=kind, default=None)

    sp = command("scan", "classify a list of lambda values")
    pk(sp)
    sp.add_argument("--lams", type=_floats, default=None, help="comma-separated lambda values")
    sp.add_argument("--t-max", type=float, default=None)
    sp.add_argument("--workers", type=int, default=None)

    sp = command("asymptotics", "table of amplitudes, scales and spectral gaps over p")
    sp.add_argument("--K", type=int, default=None)
    sp.add_argument("--p-list", type=_floats, default=None)
    sp.add_argument("--R", type=float, default=None)
    sp.add_argument("--nodes", type=int, default=None)
    sp.add_argument("--workers", type=int, default=None)

    sp = command("verify", "run the acceptance suite")
    sp.add_argument("--only", type=_ints, default=None, help="comma-separated criterion numbers")
    sp.add_argument("--skip-borderline", action="store_true", help="skip the reported-only borderline evolution")
    return parser


_DEFAULTS = {
    "stationary": {"step": 0.01},
    "spectrum": {"limit": False, "R": 40.0, "nodes": None},
    "liouville": {"compare_radius": 5.0, "nodes": 2001},
    "signtest": {"R": 40.0, "nodes": None},
    "evolve": {"lam": 1.0},
    "scan": {"lams": [0.5, 0.9, 0.99, 1.01, 1.1, 2.0], "workers": 1},
    "asymptotics": {"K": 2, "p_list": [20.0, 50.0, 100.0, 200.0], "R": 40.0, "nodes": None, "workers": 1},
    "verify": {"only": None, "skip_borderline": False},
}


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    merged = dict(_DEFAULTS.get(args.command, {}))
    if args.config:
        try:
            with open(args.config) as fh:
                from_file = json.load(fh)
        except (OSError, ValueError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(from_file, dict):
            raise ValidationError("config file must hold a JSON object")
        merged.update(from_file)
    for key, value in vars(args).items():
        if key in _SHARED or key == "command":
            continue
        if value is not None and not (value is False and key in merged):
            merged[key] = value
    version = merged.get("schema_version", SCHEMA_VERSION)
    if "schema_version" in merged:
        del merged["schema_version"]
    return RunConfig.from_mapping(args.command, {**merged, "schema_version": version})


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _write_summary(out: Path, cfg: RunConfig, results: dict) -> Path:
    path = out / f"{cfg.command}.json"
    doc = {"config": cfg.echo(), "results": _jsonable(results)}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def _limit_nodes(cfg: RunConfig) -> int:
    n = cfg.params.get("nodes")
    return int(n) if n else int(round(200 * cfg.params["R"])) + 1


def _cmd_stationary(cfg, ws, out):
    q = cfg.params
    if q["step"] == 0.01:
        sol = ws.solution(q["p"], q["K"])
    else:
        from .shooting import default_grid, stationary_solution

        probe = ws.solution(q["p"], q["K"])
        sol = stationary_solution(q["p"], q["K"], default_grid(probe.epsilon, q["step"]))
    _write_csv(out / "stationary_profile.csv", ["r", "u", "du_dr"], zip(sol.grid.nodes, sol.values, sol.slopes))
    return {"p": sol.p, "K": sol.K, "u0": sol.amplitude, "log_u0": sol.log_amplitude, "epsilon": sol.epsilon,
            "log_epsilon": sol.log_epsilon, "nodal_radii": sol.nodal_radii, "local_maxima": local_maxima(sol),
            "node_count": sol.grid.size, "grid_signature": sol.grid.signature}


def _cmd_spectrum(cfg, ws, out):
    q = cfg.params
    if q["limit"]:
        pair = ws.limit(q["R"], _limit_nodes(cfg))
        _write_csv(out / "spectrum_eigenfunction.csv", ["r", "phi"], zip(pair.grid.nodes, pair.eigenfunction))
        return {"operator": "limit", "R": q["R"], "nodes": pair.grid.size, "eigenvalue": pair.eigenvalue,
                "residual": pair.residual, "iterations": pair.iterations}
    sol = ws.solution(q["p"], q["K"])
    pair = ws.eigenpair(q["p"], q["K"])
    _write_csv(out / "spectrum_eigenfunction.csv", ["r", "phi"], zip(pair.grid.nodes, pair.eigenfunction))
    return {"operator": "linearized", "p": sol.p, "K": sol.K, "eigenvalue": pair.eigenvalue,
            "rescaled_eigenvalue": rescaled_eigenvalue(sol, pair), "residual": pair.residual,
            "iterations": pair.iterations}


def _cmd_liouville(cfg, ws, out):
    q = cfg.params
    sol = ws.solution(q["p"], q["K"])
    radius = q["compare_radius"]
    grid = make_uniform_grid(q["nodes"], radius)
    prof = rescaled_profile(sol, grid)
    pot = potential(sol, grid)
    x = grid.nodes
    _write_csv(out / "liouville_profile.csv", ["x", "z_p", "z_star", "V_p", "exp_z_star"],
               zip(x, prof.values, z_star(x), pot.values, exp_z_star(x)))
    gaps = c1loc_distance(prof, radius)
    return {"p": sol.p, "K": sol.K, "compare_radius": radius, **gaps,
            "sup_potential_gap": float(np.max(np.abs(pot.values - exp_z_star(x))))}


def _cmd_energy(cfg, ws, out):
    rep = energy(ws.solution(cfg.params["p"], cfg.params["K"]))
    return {"p": rep.p, "K": rep.K, "E_p": rep.E_p, "dirichlet": rep.dirichlet, "nonlinear": rep.nonlinear,
            "p_times_dirichlet": rep.p_times_dirichlet, "nehari_relative": rep.nehari_relative,
            "energy_identity_relative": rep.energy_identity_relative}


def _cmd_signtest(cfg, ws, out):
    q = cfg.params
    rep = sign_test(ws.solution(q["p"], q["K"]), ws.eigenpair(q["p"], q["K"]), ws.limit(q["R"], _limit_nodes(cfg)))
    return rep.to_dict()


def _cmd_evolve(cfg, ws, out):
    q = cfg.params
    outcome = evolve_classify(ws.solution(q["p"], q["K"]), q["lam"], cfg.controls())
    _write_csv(out / "evolve_trace.csv", ["t", "supnorm"], outcome.supnorm_trace)
    return {"p": q["p"], "K": q["K"], **outcome.to_dict()}


def _scan_task(args):
    p, K, lam, controls = args
    from .shooting import stationary_solution

    return evolve_classify(stationary_solution(p, K), lam, controls)


def _cmd_scan(cfg, ws, out):
    q = cfg.params
    controls = EvolutionControls(t_max=q["t_max"]) if q.get("t_max") else EvolutionControls()
    lams = [float(x) for x in q["lams"]]
    if q["workers"] > 1:
        with ProcessPoolExecutor(max_workers=q["workers"]) as pool:
            outcomes = list(pool.map(_scan_task, [(q["p"], q["K"], lam, controls) for lam in lams]))
    else:
        sol = ws.solution(q["p"], q["K"])
        outcomes = [evolve_classify(sol, lam, controls) for lam in lams]
    _write_csv(out / "scan_table.csv", ["lambda", "classification", "final_time", "blowup_time_estimate", "steps"],
               [(o.lam, o.classification.value, o.final_time,
                 "" if o.blowup_time_estimate is None else o.blowup_time_estimate, o.steps) for o in outcomes])
    return {"p": q["p"], "K": q["K"], "outcomes": [o.to_dict() for o in outcomes],
            "boundaries": scan_boundaries(outcomes)}


_TABLE_COLUMNS = ["p", "K", "u0", "r1_over_eps", "M2_over_M1", "lambda1", "lambda1_tilde", "lambda1_star",
                  "phi_l2_gap", "z_sup_gap", "z_slope_gap"]


def _cmd_asymptotics(cfg, ws, out):
    q = cfg.params
    rows = asymptotics_table(q["K"], q["p_list"], workers=q["workers"], truncation_radius=q["R"],
                             node_count=_limit_nodes(cfg))
    _write_csv(out / "asymptotics_table.csv", _TABLE_COLUMNS, [[r[c] for c in _TABLE_COLUMNS] for r in rows])
    return {"rows": rows}


def _cmd_verify(cfg, ws, out):
    from .acceptance import blowup_dichotomy

    results = []
    for n in sorted(cfg.params["only"] or CRITERIA):
        if n == 8:
            res = blowup_dichotomy(ws, report_borderline=not cfg.params["skip_borderline"])
        else:
            res = CRITERIA[n](ws)
        print(res.line(), flush=True)
        results.append(res)
    _write_csv(out / "verify_report.csv", ["criterion", "name", "passed"],
               [(r.number, r.name, r.passed) for r in results])
    return {"all_passed": all(r.passed for r in results), "criteria": [r.to_dict() for r in results]}


_COMMANDS = {
    "stationary": _cmd_stationary,
    "spectrum": _cmd_spectrum,
    "liouville": _cmd_liouville,
    "energy": _cmd_energy,
    "signtest": _cmd_signtest,
    "evolve": _cmd_evolve,
    "scan": _cmd_scan,
    "asymptotics": _cmd_asymptotics,
    "verify": _cmd_verify,
}


def run(argv=None) -> int:
    """Parse ``argv``, dispatch and return the exit code."""
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = _config_from_args(args)
    except ValidationError as exc:
        print(f"nodalheat: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        ws = Workspace(args.cache_dir, use_disk=not args.no_cache)
        results = _COMMANDS[cfg.command](cfg, ws, out)
        path = _write_summary(out, cfg, results)
    except (NoConvergenceError, SolverFailure, StepRejected) as exc:
        print(f"nodalheat: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError) as exc:
        print(f"nodalheat: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(f"wrote {path}")
    if cfg.command == "verify" and not results["all_passed"]:
        failed = [c["number"] for c in results["criteria"] if not c["passed"]]
        print(f"nodalheat: verification failed for criteria {failed}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
