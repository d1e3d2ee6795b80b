"""Radial nonlinear heat flow ``v_t - Delta v = |v|^(p-1) v`` on the unit disk.

Diffusion is a backward-Euler step on the finite-volume Laplacian of
:mod:`nodalheat.spectral` (one tridiagonal solve per step). The reaction is
advanced explicitly by its exact pointwise flow

    v -> v (1 - (p-1) tau |v|^(p-1))^(-1/(p-1))

in a symmetric splitting (half reaction, diffusion, half reaction), so no
Newton solve is needed. Step sizes come from step doubling.

Step sizes are carried as ``log dt``: for large p the natural time scale is
``eps^2 ~ 1e-80`` and near blowup ``dt ~ |v|^(1-p)`` underflows long before
``|v|`` reaches the detection threshold. Powers of ``|v|`` only ever appear
inside ``exp(log dt + (p-1) log|v|)``.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .grid import RadialGrid
from .shooting import StationarySolution
from .spectral import assemble

log = logging.getLogger(__name__)

__all__ = [
    "Classification",
    "EvolutionControls",
    "EvolutionOutcome",
    "HeatState",
    "StepRejected",
    "step",
    "evolve",
    "evolve_classify",
    "lambda_scan",
    "scan_boundaries",
]

# square of the first zero of J0: Dirichlet ground energy of the unit disk
_DISK_GROUND = 5.783185962946784


class StepRejected(ArithmeticError):
    """A step produced non-finite values or crossed a reaction singularity."""


class Classification(enum.Enum):
    BLOWUP = "Blowup"
    GLOBAL_DECAY = "GlobalDecay"
    UNDECIDED = "Undecided"


@dataclass(frozen=True)
class EvolutionControls:
    t_max: float = 10.0
    dt_init: float | None = None
    blowup_threshold: float = 1e8
    decay_threshold: float = 1e-3
    dt_floor: float = 1e-14
    rtol: float = 1e-4
    max_steps: int = 200_000

    def validate(self) -> None:
        for name in ("t_max", "blowup_threshold", "decay_threshold", "dt_floor", "rtol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.dt_init is not None and not self.dt_init > 0:
            raise ValueError("dt_init must be positive")
        if self.blowup_threshold < 1e6:
            raise ValueError("blowup_threshold must be at least 1e6")


@dataclass
class EvolutionOutcome:
    classification: Classification
    lam: float
    final_time: float
    supnorm_trace: list[tuple[float, float]] = field(default_factory=list)
    blowup_time_estimate: float | None = None
    steps: int = 0
    rejected: int = 0
    final_log_dt: float = 0.0

    def to_dict(self) -> dict:
        return {
            "classification": self.classification.value,
            "lambda": self.lam,
            "final_time": self.final_time,
            "blowup_time_estimate": self.blowup_time_estimate,
            "steps": self.steps,
            "rejected": self.rejected,
            "final_log_dt": self.final_log_dt,
        }


@dataclass(frozen=True, eq=False)
class HeatState:
    grid: RadialGrid
    values: np.ndarray
    time: float = 0.0


class _Diffusion:
    """Backward-Euler solver for ``M v_t = -A v`` with outer Dirichlet node.

    ``M + dt A`` is an M-matrix with nonnegative row sums, so a step never
    raises ``max|v|`` whatever ``dt`` is. Crank-Nicolson would not damp the
    stiff modes of the graded core (``dt/h^2`` reaches 1e80).
    """

    def __init__(self, grid: RadialGrid):
        op = assemble(grid, np.zeros(grid.size))
        self.grid = grid
        self.diag = op.diag
        self.off = op.off
        self.mass = op.mass

    def apply(self, v: np.ndarray, dt: float) -> np.ndarray:
        if dt == 0.0:
            return v.copy()
        x = v[:-1]
        rhs = self.mass * x
        ab = np.empty((3, x.size))
        ab[0, 0] = 0.0
        ab[0, 1:] = dt * self.off
        ab[1] = self.mass + dt * self.diag
        ab[2, :-1] = dt * self.off
        ab[2, -1] = 0.0
        out = np.zeros_like(v)
        out[:-1] = solve_banded((1, 1), ab, rhs, check_finite=False)
        return out


def _reaction_flow(v: np.ndarray, log_tau: float, p: float) -> np.ndarray:
    """Exact solution of ``y' = |y|^(p-1) y`` after time ``exp(log_tau)``."""
    a = np.abs(v)
    nz = a > 0
    out = v.copy()
    if not np.any(nz):
        return out
    with np.errstate(over="ignore"):
        g = np.exp(math.log(p - 1.0) + log_tau + (p - 1.0) * np.log(a[nz]))
    if np.any(g >= 1.0) or not np.all(np.isfinite(g)):
        raise StepRejected("reaction singularity inside the step")
    out[nz] = v[nz] * np.exp(-np.log1p(-g) / (p - 1.0))
    return out


def _strang(v: np.ndarray, log_dt: float, p: float, diffusion: _Diffusion, reaction: bool = True) -> np.ndarray:
    dt = math.exp(log_dt) if log_dt > -745.0 else 0.0
    if reaction:
        v = _reaction_flow(v, log_dt - math.log(2.0), p)
    v = diffusion.apply(v, dt)
    if reaction:
        v = _reaction_flow(v, log_dt - math.log(2.0), p)
    if not np.all(np.isfinite(v)):
        raise StepRejected("non-finite values after step")
    return v


_DIFFUSION_CACHE: dict[str, _Diffusion] = {}


def _diffusion_for(grid: RadialGrid) -> _Diffusion:
    key = grid.signature
    if key not in _DIFFUSION_CACHE:
        if len(_DIFFUSION_CACHE) > 16:
            _DIFFUSION_CACHE.clear()
        _DIFFUSION_CACHE[key] = _Diffusion(grid)
    return _DIFFUSION_CACHE[key]


def step(state: HeatState, dt: float, p: float, reaction: bool = True) -> HeatState:
    """One IMEX step of size ``dt``; raises :class:`StepRejected` on failure."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    v = _strang(np.asarray(state.values, dtype=float), math.log(dt), p, _diffusion_for(state.grid), reaction)
    return HeatState(state.grid, v, state.time + dt)


def _blowup_time(trace: list[tuple[float, float]], log_norms: list[float], p: float) -> float:
    """Fit ``|v| ~ c (T - t)^(-1/(p-1))`` over the last decade of the trace."""
    t_last = trace[-1][0]
    top = log_norms[-1]
    idx = [i for i, ln in enumerate(log_norms) if ln >= top - math.log(10.0)]
    if len(idx) < 3:
        return t_last
    t = np.array([trace[i][0] for i in idx])
    ln = np.array([log_norms[i] for i in idx])
    # |v|^(1-p), scaled by its value at the start of the decade, is linear in t
    s = np.exp((1.0 - p) * (ln - ln[0]))
    if np.ptp(t) <= 0:
        return t_last
    slope, intercept = np.polyfit(t - t[0], s, 1)
    if not slope < 0:
        return t_last
    return float(max(t[0] - intercept / slope, t_last))


def evolve(grid: RadialGrid, v0: np.ndarray, p: float, controls: EvolutionControls | None = None,
           lam: float = 1.0) -> EvolutionOutcome:
    """Integrate from ``v0`` on ``grid`` and classify the outcome."""
    ctl = controls or EvolutionControls()
    ctl.validate()
    diffusion = _diffusion_for(grid)
    v = np.array(v0, dtype=float)
    v[-1] = 0.0
    norm0 = float(np.max(np.abs(v)))
    trace = [(0.0, norm0)]
    log_norms = [math.log(norm0) if norm0 > 0 else -math.inf]
    if norm0 == 0.0:
        # the zero state is a fixed point of every substep
        return EvolutionOutcome(Classification.GLOBAL_DECAY, lam, 0.0, trace, steps=0)

    h = np.diff(grid.nodes)
    if ctl.dt_init is not None:
        log_dt = math.log(ctl.dt_init)
    else:
        log_dt = 2.0 * math.log(float(h[0])) - math.log(4.0)
    log_tmax = math.log(ctl.t_max)
    log_floor = math.log(ctl.dt_floor)
    log_threshold = math.log(ctl.blowup_threshold)
    reaction_cap = math.log(0.5 / (p - 1.0))
    t = 0.0
    err_prev = 1.0
    steps = rejected = 0
    classification = Classification.UNDECIDED
    while steps < ctl.max_steps:
        vmax = float(np.max(np.abs(v)))
        lv = math.log(vmax) if vmax > 0 else -math.inf
        cap = min(reaction_cap, math.log(0.1)) - (p - 1.0) * lv
        log_dt = min(log_dt, cap)
        remaining = ctl.t_max - t
        if remaining <= 0:
            break
        log_dt = min(log_dt, math.log(remaining))
        try:
            full = _strang(v, log_dt, p, diffusion)
            half1 = _strang(v, log_dt - math.log(2.0), p, diffusion)
            half2 = _strang(half1, log_dt - math.log(2.0), p, diffusion)
        except StepRejected:
            rejected += 1
            log_dt -= math.log(2.0)
            continue
        scale = 1e-12 * norm0 + ctl.rtol * max(vmax, float(np.max(np.abs(half2))))
        err = float(np.max(np.abs(half2 - full))) / scale
        if err > 1.0:
            rejected += 1
            log_dt += math.log(max(0.2, 0.9 * err ** (-1.0 / 2.0)))
            continue
        dt = math.exp(log_dt) if log_dt > -745.0 else 0.0
        v = half2
        t += dt
        steps += 1
        vmax = float(np.max(np.abs(v)))
        lv = math.log(vmax) if vmax > 0 else -math.inf
        if t > trace[-1][0]:
            trace.append((t, vmax))
            log_norms.append(lv)
        else:
            # time no longer resolves the step: keep the latest norm
            trace[-1] = (trace[-1][0], vmax)
            log_norms[-1] = lv
        increasing = len(log_norms) >= 2 and log_norms[-1] >= log_norms[-2]
        if lv >= log_threshold and log_dt < log_floor and increasing:
            classification = Classification.BLOWUP
            break
        if vmax <= ctl.decay_threshold * norm0 and (p - 1.0) * lv < math.log(_DISK_GROUND):
            tail = log_norms[-min(len(log_norms), 10):]
            if all(b <= a + 1e-12 for a, b in zip(tail, tail[1:])):
                classification = Classification.GLOBAL_DECAY
                break
        fac = 0.9 * max(err, 1e-10) ** (-0.7 / 2.0) * err_prev ** (0.4 / 2.0)
        log_dt += math.log(min(5.0, max(0.2, fac)))
        err_prev = max(err, 1e-4)
    outcome = EvolutionOutcome(classification, lam, t, trace, steps=steps, rejected=rejected, final_log_dt=log_dt)
    if classification is Classification.BLOWUP:
        outcome.blowup_time_estimate = _blowup_time(trace, log_norms, p)
    return outcome


def evolve_classify(sol: StationarySolution, lam: float, controls: EvolutionControls | None = None,
                    grid: RadialGrid | None = None) -> EvolutionOutcome:
    """Evolve ``lam * u_{p,K}`` and classify it as Blowup, GlobalDecay or Undecided."""
    grid = grid or sol.grid
    u = sol.values if grid is sol.grid else sol.evaluate(grid.nodes)[0]
    out = evolve(grid, lam * u, sol.p, controls, lam=lam)
    log.info("p=%g K=%d lambda=%g -> %s at t=%.3e (%d steps)", sol.p, sol.K, lam,
             out.classification.value, out.final_time, out.steps)
    return out


def lambda_scan(sol: StationarySolution, lambdas, controls: EvolutionControls | None = None) -> list[EvolutionOutcome]:
    """Outcomes for each ``lam`` in input order."""
    lambdas = [float(x) for x in lambdas]
    if not all(math.isfinite(x) for x in lambdas):
        raise ValueError("lambdas must be finite")
    return [evolve_classify(sol, x, controls) for x in lambdas]


def scan_boundaries(outcomes: list[EvolutionOutcome]) -> dict:
    """Empirical Blowup thresholds below and above ``lam = 1``.

    Each side reports ``(a, b)``: ``b`` is the smallest blowing-up ``lam`` on
    that side and ``a`` the largest ``lam`` below ``b`` that did not blow up
    (GlobalDecay below one; anything but Blowup above one). ``None`` when the
    scan did not bracket a transition.
    """
    def side(items, quiet):
        blow = [o.lam for o in items if o.classification is Classification.BLOWUP]
        if not blow:
            return None
        b = min(blow)
        calm = [o.lam for o in items if o.lam < b and quiet(o.classification)]
        return (max(calm), b) if calm else None

    below = [o for o in outcomes if o.lam < 1]
    above = [o for o in outcomes if o.lam > 1]
    return {
        "below_one": side(below, lambda c: c is Classification.GLOBAL_DECAY),
        "above_one": side(above, lambda c: c is not Classification.BLOWUP),
    }
