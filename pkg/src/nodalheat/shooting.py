"""Radial Lane-Emden shooting and the K-nodal stationary solutions.

The normalized profile ``w`` solves ``w'' + w'/r + |w|^(p-1) w = 0`` with
``w(0) = 1, w'(0) = 0``. It is integrated in the log-radius ``t = log r`` with
state ``(w, r w')``:

    dw/dt = r w',    d(r w')/dt = -r^2 |w|^(p-1) w

which removes the 1/r coefficient and lets the step size follow the profile
across the 40+ decades of r that separate the zeros once p is large.

The K-nodal solution on the unit disk is the rescaling
``u(r) = rho_K^(2/(p-1)) w(rho_K r)`` where ``rho_K`` is the K-th zero of w.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .grid import RadialGrid, graded_node_count, make_graded_grid

__all__ = [
    "NoConvergenceError",
    "StepControl",
    "LaneEmdenTrajectory",
    "StationarySolution",
    "integrate_lane_emden",
    "stationary_solution",
    "local_maxima",
    "epsilon_of",
    "guarded_power",
]

# Dormand-Prince 5(4) tableau with Shampine's quartic continuous extension.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_TINY = 1e-300


class NoConvergenceError(RuntimeError):
    """Raised when the requested zeros are not reached before ``r_max``."""


@dataclass(frozen=True)
class StepControl:
    """Tolerances and limits for the adaptive integrator."""

    atol: float = 1e-12
    rtol: float = 1e-10
    r_start: float = 1e-8
    r_max: float = 1e300
    max_steps: int = 200_000
    root_tol: float = 1e-14


def guarded_power(x, q: float):
    """``|x|^q`` evaluated as ``exp(q log|x|)``; entries with ``|x| < 1e-300`` give 0."""
    x = np.abs(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    mask = x >= _TINY
    with np.errstate(over="ignore"):
        out[mask] = np.exp(q * np.log(x[mask]))
    return out


def _rhs(t: float, y: np.ndarray, p: float) -> np.ndarray:
    w, v = y
    aw = abs(w)
    if aw < _TINY:
        return np.array([v, 0.0])
    expo = 2.0 * t + p * math.log(aw)
    if expo < -745.0:
        force = 0.0
    else:
        force = math.exp(min(expo, 700.0))
    return np.array([v, -math.copysign(force, w)])


@dataclass(frozen=True, eq=False)
class LaneEmdenTrajectory:
    """Accepted steps of the log-radius integration plus dense-output data.

    ``t`` holds step boundaries (log r), ``y`` the states ``(w, r w')`` there
    and ``q`` the per-step quartic coefficients, shape ``(steps, 2, 4)``.
    """

    p: float
    t: np.ndarray
    y: np.ndarray
    q: np.ndarray
    log_zeros: np.ndarray

    @property
    def zeros(self) -> np.ndarray:
        return np.exp(self.log_zeros)

    @property
    def t_start(self) -> float:
        return float(self.t[0])

    def state_at_log(self, tq) -> np.ndarray:
        """Dense-output state ``(w, r w')`` at log radii ``tq``; shape ``(2, m)``."""
        tq = np.atleast_1d(np.asarray(tq, dtype=float))
        out = np.empty((2, tq.size))
        below = tq < self.t[0]
        if np.any(below):
            # two-term series, w(0) = 1
            r2 = np.exp(2.0 * tq[below])
            out[0, below] = 1.0 - r2 / 4.0
            out[1, below] = -r2 / 2.0
        inside = ~below
        if np.any(inside):
            ti = tq[inside]
            if np.any(ti > self.t[-1] * (1 + 1e-15) + 1e-15):
                raise ValueError("requested radius lies beyond the integrated range")
            k = np.clip(np.searchsorted(self.t, ti, side="right") - 1, 0, self.t.size - 2)
            h = self.t[k + 1] - self.t[k]
            x = (ti - self.t[k]) / h
            powers = np.stack([x, x * x, x ** 3, x ** 4])  # (4, m)
            # q[k] is (2, 4); y = y_k + h * q_k @ powers
            incr = np.einsum("mij,jm->im", self.q[k], powers)
            out[:, inside] = self.y[k].T + h * incr
        return out

    def w(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        res = np.ones(r.shape)
        pos = r > 0
        if np.any(pos):
            res[pos] = self.state_at_log(np.log(r[pos]))[0]
        return res

    def dw(self, r) -> np.ndarray:
        """``w'(r)``, from the dense ``r w'`` divided by r (series near 0)."""
        r = np.asarray(r, dtype=float)
        res = np.zeros(r.shape)
        pos = r > 0
        if np.any(pos):
            res[pos] = self.state_at_log(np.log(r[pos]))[1] / r[pos]
        return res


def _dopri_step(t, y, f0, h, p):
    k = [f0]
    for i in range(1, 6):
        yi = y + h * sum(a * kk for a, kk in zip(_A[i], k))
        k.append(_rhs(t + _C[i] * h, yi, p))
    y_new = y + h * sum(b * kk for b, kk in zip(_B, k))
    f_new = _rhs(t + h, y_new, p)
    k.append(f_new)
    K = np.array(k)  # (7, 2)
    err = h * (_E @ K)
    return y_new, f_new, err, K


def integrate_lane_emden(p: float, zero_target: int, step_control: StepControl | None = None) -> LaneEmdenTrajectory:
    """Integrate the normalized radial profile until its ``zero_target``-th zero.

    Adaptive Dormand-Prince 5(4) with PI step control in ``t = log r``;
    every sign change of w inside an accepted step is refined on the dense
    output with Brent's method. Raises :class:`NoConvergenceError` when
    ``r_max`` or ``max_steps`` is reached first.
    """
    if not p > 1:
        raise ValueError(f"exponent p must exceed 1, got {p}")
    if zero_target < 1:
        raise ValueError("zero_target must be >= 1")
    ctl = step_control or StepControl()
    t = math.log(ctl.r_start)
    r2 = ctl.r_start ** 2
    y = np.array([1.0 - r2 / 4.0, -r2 / 2.0])
    f = _rhs(t, y, p)
    t_end = math.log(ctl.r_max)

    ts, ys, qs, zeros = [t], [y.copy()], [], []
    h = 0.05
    err_prev = 1e-4
    safety, alpha, beta = 0.9, 0.7 / 5, 0.4 / 5
    steps = 0
    while len(zeros) < zero_target:
        if t >= t_end or steps >= ctl.max_steps:
            raise NoConvergenceError(
                f"found {len(zeros)} of {zero_target} zeros before r = {math.exp(min(t, 709)):.3e} (p = {p})"
            )
        h = min(h, t_end - t)
        with np.errstate(over="ignore", invalid="ignore"):
            y_new, f_new, err_vec, K = _dopri_step(t, y, f, h, p)
            # v = r w' is O(r^2) near the origin: its absolute floor shrinks with it
            floor = np.array([ctl.atol, ctl.atol * math.exp(min(2.0 * t, 0.0))])
            scale = floor + ctl.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        if not np.isfinite(err) or err > 1.0:
            fac = 0.2 if not np.isfinite(err) else max(0.2, safety * err ** (-alpha))
            h *= fac
            continue
        steps += 1
        q = K.T @ _P  # (2, 4)
        if y[0] == 0.0 or np.sign(y_new[0]) != np.sign(y[0]):
            def w_at(x, y0=y, q0=q, h0=h):
                return y0[0] + h0 * (q0[0] @ np.array([x, x * x, x ** 3, x ** 4]))
            x0 = brentq(w_at, 0.0, 1.0, xtol=ctl.root_tol / h, rtol=4 * np.finfo(float).eps)
            zeros.append(t + x0 * h)
        t += h
        y, f = y_new, f_new
        ts.append(t)
        ys.append(y.copy())
        qs.append(q)
        fac = safety * max(err, 1e-10) ** (-alpha) * err_prev ** beta
        h *= min(5.0, max(0.2, fac))
        err_prev = max(err, 1e-4)

    zeros = np.array(zeros[:zero_target])
    return LaneEmdenTrajectory(p=float(p), t=np.array(ts), y=np.array(ys), q=np.array(qs), log_zeros=zeros)


@dataclass(frozen=True, eq=False)
class StationarySolution:
    """The K-nodal radial solution on the unit disk, sampled on ``grid``.

    ``slopes`` holds ``u'(r)`` from the dense output (not finite differences).
    Evaluation off-grid goes through :meth:`evaluate`.
    """

    p: float
    K: int
    grid: RadialGrid
    values: np.ndarray
    slopes: np.ndarray
    nodal_radii: np.ndarray
    amplitude: float
    epsilon: float
    trajectory: LaneEmdenTrajectory

    @property
    def log_amplitude(self) -> float:
        return 2.0 * float(self.trajectory.log_zeros[self.K - 1]) / (self.p - 1.0)

    @property
    def log_epsilon(self) -> float:
        return -0.5 * (math.log(self.p) + (self.p - 1.0) * self.log_amplitude)

    @property
    def outer_zero(self) -> float:
        """``rho_K``: the zero of w that is mapped to r = 1."""
        return float(self.trajectory.zeros[self.K - 1])

    def evaluate(self, r):
        """``(u(r), u'(r))`` at arbitrary radii in ``[0, 1]``."""
        r = np.asarray(r, dtype=float)
        rho = self.outer_zero
        state_r = r * rho
        w = self.trajectory.w(state_r)
        dw = self.trajectory.dw(state_r)
        return self.amplitude * w, self.amplitude * rho * dw

    def normalized_at_rescaled(self, x):
        """``u(eps x)/u(0)`` and its x-derivative, evaluated without forming ``eps``.

        Uses ``rho_K * eps = p**-0.5`` so the rescaled profile is independent
        of K inside the first nodal region.
        """
        x = np.asarray(x, dtype=float)
        c = self.p ** -0.5
        s = x * c
        if np.any(s > self.outer_zero * (1 + 1e-12)):
            raise ValueError("rescaled radius exceeds 1/epsilon")
        s = np.minimum(s, self.outer_zero)
        return self.trajectory.w(s), c * self.trajectory.dw(s)


def default_grid(epsilon: float, step: float = 0.01) -> RadialGrid:
    """Graded unit-disk grid with uniform core spacing ``epsilon*step``."""
    return make_graded_grid(graded_node_count(1.0, epsilon, step), 1.0, epsilon)


def stationary_solution(p: float, K: int, grid: RadialGrid | None = None,
                        step_control: StepControl | None = None) -> StationarySolution:
    """Unique K-nodal radial solution with ``u(0) > 0`` and ``u(1) = 0``.

    When ``grid`` is omitted a graded grid resolving the core scale
    ``epsilon`` is built (see :func:`default_grid`).
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    traj = integrate_lane_emden(p, K, step_control)
    log_rho = traj.log_zeros
    log_amp = 2.0 * log_rho[K - 1] / (p - 1.0)
    amplitude = math.exp(log_amp)
    epsilon = math.exp(-0.5 * (math.log(p) + (p - 1.0) * log_amp))
    if grid is None:
        grid = default_grid(epsilon)
    if grid.outer_radius != 1.0:
        raise ValueError("stationary solutions live on the unit disk (outer_radius = 1)")
    nodal_radii = np.exp(log_rho[: K - 1] - log_rho[K - 1])
    sol = StationarySolution(
        p=float(p), K=int(K), grid=grid, values=np.empty(0), slopes=np.empty(0),
        nodal_radii=nodal_radii, amplitude=amplitude, epsilon=epsilon, trajectory=traj,
    )
    values, slopes = sol.evaluate(grid.nodes)
    values[-1] = 0.0
    object.__setattr__(sol, "values", values)
    object.__setattr__(sol, "slopes", slopes)
    return sol


def local_maxima(sol: StationarySolution) -> np.ndarray:
    """``|u|`` maxima of the K nodal regions, ``M_1 = u(0)`` first.

    Interior extrema are the roots of ``r w'`` between consecutive zeros,
    refined on the dense output.
    """
    traj = sol.trajectory
    log_z = traj.log_zeros
    out = [sol.amplitude]
    for j in range(1, sol.K):
        lo, hi = log_z[j - 1], log_z[j]
        g = lambda tt: traj.state_at_log(tt)[1, 0]
        t_ext = brentq(g, lo, hi, xtol=1e-13)
        out.append(sol.amplitude * abs(traj.state_at_log(t_ext)[0, 0]))
    return np.array(out)


def epsilon_of(sol: StationarySolution) -> float:
    """``(p * u(0)^(p-1))^(-1/2)``."""
    return math.exp(-0.5 * (math.log(sol.p) + (sol.p - 1.0) * math.log(sol.amplitude)))
