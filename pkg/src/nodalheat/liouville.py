"""The Liouville profile ``z*`` and rescalings of the stationary solutions.

``z*(r) = -2 log(1 + r^2/8)`` solves ``-Delta z = e^z`` in the plane with
``z(0) = 0``. The rescaled profile ``z_p(x) = p (u(eps x)/u(0) - 1)`` and the
potential ``V_p(x) = |u(eps x)/u(0)|^(p-1)`` converge to ``z*`` and ``e^{z*}``
on compact sets as p grows.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .grid import RadialGrid, radial_derivative
from .shooting import StationarySolution, guarded_power

__all__ = [
    "ProfileKind",
    "RescaledProfile",
    "z_star",
    "z_star_derivative",
    "exp_z_star",
    "liouville_mass",
    "liouville_tail_bound",
    "rescaled_profile",
    "potential",
    "c1loc_distance",
]


class ProfileKind(enum.Enum):
    Z_PROFILE = "z_profile"
    POTENTIAL = "potential"
    EIGENFUNCTION = "eigenfunction"


def z_star(r):
    r = np.asarray(r, dtype=float)
    return -2.0 * np.log1p(r * r / 8.0)


def z_star_derivative(r):
    r = np.asarray(r, dtype=float)
    return -r / (2.0 * (1.0 + r * r / 8.0))


def exp_z_star(r, power: int = 1):
    """``e^{k z*} = (1 + r^2/8)^(-2k)``."""
    r = np.asarray(r, dtype=float)
    return (1.0 + r * r / 8.0) ** (-2.0 * power)


def liouville_mass(radius: float, power: int = 1) -> float:
    """Closed form of ``int_{|x|<R} e^{k z*} dx = 8 pi/(2k-1) (1 - (1+R^2/8)^(1-2k))``."""
    k = power
    return 8.0 * math.pi / (2 * k - 1) * (1.0 - (1.0 + radius * radius / 8.0) ** (1 - 2 * k))


def liouville_tail_bound(radius: float) -> float:
    """Upper bound ``64 pi / R^2`` for ``int_{|x|>R} e^{z*}``, from ``e^{z*} <= 64/r^4``."""
    return 64.0 * math.pi / radius ** 2


@dataclass(frozen=True, eq=False)
class RescaledProfile:
    """Samples of a rescaled radial field; zero beyond ``grid.outer_radius``."""

    grid: RadialGrid
    values: np.ndarray
    kind: ProfileKind
    source_p: float
    source_K: int
    domain_radius: float = math.inf

    def evaluate(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        spline = CubicSpline(self.grid.nodes, self.values, bc_type=((1, 0.0), "not-a-knot"))
        out = np.where(r <= self.grid.outer_radius, spline(np.minimum(r, self.grid.outer_radius)), 0.0)
        return np.where(r <= self.domain_radius, out, 0.0)


def _check_domain(sol: StationarySolution, target_grid: RadialGrid) -> None:
    if math.log(target_grid.outer_radius) > -sol.log_epsilon + 1e-12:
        raise ValueError(
            f"target radius {target_grid.outer_radius} exceeds the rescaled domain 1/eps = {math.exp(-sol.log_epsilon):.3e}"
        )


def rescaled_profile(sol: StationarySolution, target_grid: RadialGrid) -> RescaledProfile:
    """``z_p(x) = (p/u(0)) (u(eps x) - u(0))`` sampled on ``target_grid``."""
    _check_domain(sol, target_grid)
    ratio, _ = sol.normalized_at_rescaled(target_grid.nodes)
    values = sol.p * (ratio - 1.0)
    values[0] = 0.0
    return RescaledProfile(target_grid, values, ProfileKind.Z_PROFILE, sol.p, sol.K,
                           domain_radius=math.exp(-sol.log_epsilon))


def potential(sol: StationarySolution, target_grid: RadialGrid) -> RescaledProfile:
    """``V_p(x) = |u(eps x)|^(p-1) / u(0)^(p-1)`` sampled on ``target_grid``."""
    _check_domain(sol, target_grid)
    ratio, _ = sol.normalized_at_rescaled(target_grid.nodes)
    values = np.minimum(guarded_power(ratio, sol.p - 1.0), 1.0)
    return RescaledProfile(target_grid, values, ProfileKind.POTENTIAL, sol.p, sol.K,
                           domain_radius=math.exp(-sol.log_epsilon))


def c1loc_distance(profile: RescaledProfile, compare_radius: float = 5.0) -> dict:
    """Sup gaps ``|z_p - z*|`` and ``|z_p' - z*'|`` over nodes with ``r <= compare_radius``."""
    if profile.kind is not ProfileKind.Z_PROFILE:
        raise ValueError(f"c1loc_distance needs a Z_PROFILE, got {profile.kind.name}")
    if compare_radius > profile.grid.outer_radius * (1 + 1e-12):
        raise ValueError("compare_radius exceeds the profile grid")
    r = profile.grid.nodes
    mask = r <= compare_radius * (1 + 1e-12)
    slope = radial_derivative(profile.grid, profile.values)
    return {
        "sup_value_gap": float(np.max(np.abs(profile.values[mask] - z_star(r[mask])))),
        "sup_derivative_gap": float(np.max(np.abs(slope[mask] - z_star_derivative(r[mask])))),
    }
