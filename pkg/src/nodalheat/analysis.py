"""Energy identities, the blowup sign test and asymptotics tables."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .grid import integrate_disk, make_uniform_grid
from .liouville import c1loc_distance, exp_z_star, rescaled_profile
from .shooting import StationarySolution, guarded_power, local_maxima, stationary_solution
from .spectral import (
    EigenPair,
    limit_eigenpair,
    linearized_eigenpair,
    rescaled_eigenfunction,
    rescaled_eigenvalue,
)

__all__ = [
    "EnergyReport",
    "SignTestReport",
    "energy",
    "sign_test",
    "limit_sign_value",
    "asymptotics_row",
    "asymptotics_table",
    "DEFAULT_P_LIST",
]

DEFAULT_P_LIST = (20.0, 50.0, 100.0, 200.0)


@dataclass(frozen=True)
class EnergyReport:
    p: float
    K: int
    E_p: float
    dirichlet: float
    nonlinear: float
    p_times_dirichlet: float
    nehari_residual: float

    @property
    def nehari_relative(self) -> float:
        return self.nehari_residual / self.dirichlet

    @property
    def energy_identity_relative(self) -> float:
        """``|E_p - (p-1)/(2(p+1)) int|grad u|^2| / |E_p|``."""
        target = (self.p - 1.0) / (2.0 * (self.p + 1.0)) * self.dirichlet
        return abs(self.E_p - target) / abs(self.E_p)


def energy(sol: StationarySolution) -> EnergyReport:
    """Energy, ``p int|grad u|^2`` and the Nehari gap ``|int|grad u|^2 - int|u|^(p+1)|``.

    The gradient comes from the dense ODE output, not from differencing the
    samples.
    """
    G = integrate_disk(sol.grid, sol.slopes ** 2)
    N = integrate_disk(sol.grid, guarded_power(sol.values, sol.p + 1.0))
    E = 0.5 * G - N / (sol.p + 1.0)
    return EnergyReport(sol.p, sol.K, E, G, N, sol.p * G, abs(G - N))


@dataclass(frozen=True)
class SignTestReport:
    p: float
    K: int
    integral_u_phi: float
    integral_up_phi: float
    identity_residual: float
    normalized_integral: float
    limit_value: float
    eigenvalue: float

    @property
    def identity_relative(self) -> float:
        return self.identity_residual / abs(self.integral_u_phi)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["identity_relative"] = self.identity_relative
        return d


def limit_sign_value(limit_pair: EigenPair) -> float:
    """``int e^{z*} phi_1*`` over the truncation disk of ``limit_pair``."""
    g = limit_pair.grid
    return integrate_disk(g, exp_z_star(g.nodes) * limit_pair.eigenfunction)


def sign_test(sol: StationarySolution, pair: EigenPair, limit_pair: EigenPair) -> SignTestReport:
    """Both sides of ``(p-1)/(-lambda_1) int |u|^(p-1) u phi = int u phi`` and the scaled limit.

    ``int |u|^(p-1) u phi`` is assembled as ``exp(p log|u| + log phi - p log u(0) - log eps)``
    so the normalized integral never forms ``u(0)^p``.
    """
    if pair.grid is not sol.grid and pair.grid.signature != sol.grid.signature:
        raise ValueError("eigenpair must live on the solution grid")
    p = sol.p
    u = sol.values
    phi = pair.eigenfunction
    log_u0 = sol.log_amplitude
    log_eps = sol.log_epsilon
    ok = (np.abs(u) > 0) & (phi > 0)
    scaled = np.zeros_like(u)
    scaled[ok] = np.sign(u[ok]) * np.exp(p * np.log(np.abs(u[ok])) + np.log(phi[ok]) - p * log_u0 - log_eps)
    normalized = integrate_disk(sol.grid, scaled)
    up_phi = normalized * math.exp(p * log_u0 + log_eps)
    u_phi = integrate_disk(sol.grid, u * phi)
    residual = abs((p - 1.0) / (-pair.eigenvalue) * up_phi - u_phi)
    return SignTestReport(p, sol.K, u_phi, up_phi, residual, normalized, limit_sign_value(limit_pair), pair.eigenvalue)


def asymptotics_row(p: float, K: int, limit_pair: EigenPair | None = None, compare_radius: float = 5.0) -> dict:
    """One row of the asymptotics table for ``(p, K)``."""
    limit_pair = limit_pair or limit_eigenpair()
    sol = stationary_solution(p, K)
    maxima = local_maxima(sol)
    pair = linearized_eigenpair(sol)
    lam_tilde = rescaled_eigenvalue(sol, pair)
    phi_t = rescaled_eigenfunction(sol, pair, limit_pair.grid)
    diff = phi_t.values - limit_pair.eigenfunction
    z_grid = make_uniform_grid(2001, compare_radius)
    gaps = c1loc_distance(rescaled_profile(sol, z_grid), compare_radius)
    return {
        "p": float(p),
        "K": int(K),
        "u0": sol.amplitude,
        "r1_over_eps": (sol.nodal_radii[0] / sol.epsilon) if K >= 2 else math.nan,
        "M2_over_M1": (maxima[1] / maxima[0]) if K >= 2 else math.nan,
        "lambda1": pair.eigenvalue,
        "lambda1_tilde": lam_tilde,
        "lambda1_star": limit_pair.eigenvalue,
        "phi_l2_gap": math.sqrt(max(integrate_disk(limit_pair.grid, diff * diff), 0.0)),
        "z_sup_gap": gaps["sup_value_gap"],
        "z_slope_gap": gaps["sup_derivative_gap"],
    }


def _row_task(args):
    p, K, R, n = args
    return asymptotics_row(p, K, limit_eigenpair(R, n))


def asymptotics_table(K: int, p_list=DEFAULT_P_LIST, workers: int = 1,
                      truncation_radius: float = 40.0, node_count: int = 8001) -> list[dict]:
    """Rows for each p, in input order. ``workers > 1`` fans rows out to processes."""
    p_list = [float(p) for p in p_list]
    if any(not p > 1 for p in p_list):
        raise ValueError("every p must exceed 1")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_row_task, [(p, K, truncation_radius, node_count) for p in p_list]))
    limit_pair = limit_eigenpair(truncation_radius, node_count)
    return [asymptotics_row(p, K, limit_pair) for p in p_list]
