"""Ground states of radial Schrodinger operators ``-Delta - W`` on a disk.

Discretization is finite-volume on the grid nodes: fluxes at the midpoints
``r_{i+1/2}``, dual-cell masses ``pi (r_{i+1/2}^2 - r_{i-1/2}^2)`` (positive
at the origin, where the zero-flux face encodes ``phi'(0) = 0``) and a
Dirichlet condition at the outer node. This gives a symmetric tridiagonal
pencil ``A x = lambda M x`` with ``M`` diagonal. The lowest eigenvalue comes
from Sturm-sequence bisection on the inertia of ``A - sigma M`` and the
eigenvector from inverse iteration shifted just below it, which keeps every
iterate positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.interpolate import CubicSpline
from scipy.linalg import cho_solve_banded, cholesky_banded

from .grid import RadialGrid, graded_node_count, integrate_disk, make_graded_grid, make_uniform_grid, radial_derivative
from .liouville import ProfileKind, RescaledProfile, exp_z_star
from .shooting import StationarySolution, guarded_power

__all__ = [
    "SolverFailure",
    "RadialOperator",
    "EigenPair",
    "assemble",
    "first_eigenpair",
    "eigenvalue_count",
    "limit_eigenpair",
    "linearized_eigenpair",
    "rescaled_operator_eigenpair",
    "rescaled_eigenvalue",
    "rescaled_eigenfunction",
    "rayleigh",
]


class SolverFailure(RuntimeError):
    """Inverse iteration did not reach the requested residual."""


@dataclass(frozen=True, eq=False)
class RadialOperator:
    """Tridiagonal pencil for ``-Delta - W`` with the outer node removed.

    ``diag``/``off`` are the stiffness entries including ``-W m``; ``mass``
    is the diagonal of ``M``. All have length ``n - 1`` (``off``: ``n - 2``).
    """

    grid: RadialGrid
    potential: np.ndarray
    diag: np.ndarray
    off: np.ndarray
    mass: np.ndarray

    @property
    def size(self) -> int:
        return self.diag.size

    def stiffness_matrix(self) -> sparse.csr_matrix:
        return sparse.diags([self.off, self.diag, self.off], [-1, 0, 1], format="csr")

    def mass_matrix(self) -> sparse.csr_matrix:
        return sparse.diags(self.mass, 0, format="csr")


@dataclass(frozen=True, eq=False)
class EigenPair:
    eigenvalue: float
    eigenfunction: np.ndarray
    grid: RadialGrid
    residual: float = 0.0
    iterations: int = 0


def assemble(grid: RadialGrid, potential) -> RadialOperator:
    """Finite-volume ``-(1/r)(r phi')' - W phi`` with ``phi'(0) = 0`` and ``phi(R) = 0``."""
    W = np.asarray(potential, dtype=float)
    if W.shape != grid.nodes.shape:
        raise ValueError(f"potential needs {grid.size} entries, got {W.shape}")
    r = grid.nodes
    half = 0.5 * (r[1:] + r[:-1])
    flux = 2.0 * np.pi * half / np.diff(r)
    faces = np.concatenate(([0.0], half))  # inner face of each dual cell
    mass = np.pi * (half ** 2 - faces[:-1] ** 2)
    left = np.concatenate(([0.0], flux[:-1]))
    diag = left + flux - W[:-1] * mass
    off = -flux[:-1]
    return RadialOperator(grid, W, diag, off, mass)


def eigenvalue_count(op: RadialOperator, sigma: float) -> int:
    """Number of eigenvalues below ``sigma`` (negative pivots of ``A - sigma M``)."""
    a = (op.diag - sigma * op.mass).tolist()
    b2 = (op.off * op.off).tolist()
    count = 0
    d = a[0]
    tiny = 1e-300
    if d < 0:
        count += 1
    for i in range(1, len(a)):
        if d == 0.0:
            d = tiny
        d = a[i] - b2[i - 1] / d
        if d < 0:
            count += 1
    return count


def _bisect_lowest(op: RadialOperator, tol: float) -> tuple[float, float]:
    radius = np.abs(op.off)
    row = np.zeros(op.size)
    row[:-1] += radius
    row[1:] += radius
    lo = float(np.min((op.diag - row) / op.mass))
    hi = float(np.min(op.diag / op.mass))
    if eigenvalue_count(op, lo) > 0:
        lo -= abs(lo) + 1.0
    for _ in range(400):
        if hi - lo <= tol * max(abs(lo), abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if eigenvalue_count(op, mid) >= 1:
            hi = mid
        else:
            lo = mid
    return lo, hi


def first_eigenpair(op: RadialOperator, tol: float = 1e-13, max_iterations: int = 400,
                    residual_tol: float = 1e-8) -> EigenPair:
    """Smallest eigenvalue and its positive eigenfunction, ``||phi||_{L2} = 1``."""
    lo, hi = _bisect_lowest(op, tol)
    lam = 0.5 * (lo + hi)
    # A - lo*M is positive definite with nonpositive off-diagonals: Cholesky
    # solves keep positive right-hand sides positive.
    # the margin keeps the Cholesky factorization clear of roundoff
    top = float(np.max(np.abs(op.diag) / op.mass))
    sigma = lo - max(1e-6 * abs(lo), 1e-10 * top)
    ab = np.zeros((2, op.size))
    ab[0, 1:] = op.off
    ab[1] = op.diag - sigma * op.mass
    factor = cholesky_banded(ab, check_finite=False)
    x = np.ones(op.size)
    residual = math.inf
    scale_ref = np.abs(op.diag) + np.abs(lam) * op.mass
    for it in range(1, max_iterations + 1):
        y = cho_solve_banded((factor, False), op.mass * x, check_finite=False)
        y /= math.sqrt(float(np.dot(y * op.mass, y)))
        # componentwise test: the far tail carries r^2-weighted mass, so
        # start-vector residue there must decay too, not only the max norm
        change = np.abs(y - x) <= 1e-10 * np.abs(y)
        x = y
        if np.all(change):
            break
    else:
        raise SolverFailure(f"inverse iteration did not converge in {max_iterations} iterations")
    Ax = op.diag * x
    Ax[:-1] += op.off * x[1:]
    Ax[1:] += op.off * x[:-1]
    residual = float(np.max(np.abs(Ax - lam * op.mass * x)) / np.max(scale_ref * np.abs(x)))
    if residual > residual_tol:
        raise SolverFailure(f"eigen-residual {residual:.3e} exceeds {residual_tol:.1e}")
    phi = np.append(x, 0.0)
    if phi.sum() < 0:
        phi = -phi
    phi /= math.sqrt(integrate_disk(op.grid, phi * phi))
    return EigenPair(lam, phi, op.grid, residual=residual, iterations=it)


def limit_eigenpair(truncation_radius: float = 40.0, node_count: int = 8001, tol: float = 1e-13) -> EigenPair:
    """Ground state of ``-Delta - e^{z*}`` on the disk of radius ``truncation_radius``."""
    if truncation_radius < 20:
        raise ValueError("truncation_radius must be >= 20")
    grid = make_uniform_grid(node_count, truncation_radius)
    return first_eigenpair(assemble(grid, exp_z_star(grid.nodes)), tol=tol)


def linearized_eigenpair(sol: StationarySolution, grid: RadialGrid | None = None, tol: float = 1e-13) -> EigenPair:
    """Ground state of ``L_p = -Delta - p|u|^(p-1)`` on the unit disk.

    ``grid`` defaults to the solution's own grid. The potential is formed in
    log space, ``exp(log p + (p-1) log|u|)``, since it reaches ``eps^-2``.
    """
    grid = grid or sol.grid
    u = sol.values if grid is sol.grid else sol.evaluate(grid.nodes)[0]
    with np.errstate(divide="ignore"):
        logu = np.log(np.abs(u))
    W = np.where(np.abs(u) > 1e-300, np.exp(math.log(sol.p) + (sol.p - 1.0) * logu), 0.0)
    return first_eigenpair(assemble(grid, W), tol=tol)


def rescaled_operator_eigenpair(sol: StationarySolution, node_step: float = 0.008, core_scale: float = 0.5,
                                tol: float = 1e-13) -> EigenPair:
    """Ground state of ``-Delta - V_p`` on the rescaled disk of radius ``1/eps``.

    Uses its own graded grid in the rescaled variable, so comparing with
    ``eps^2 * lambda_1(p)`` checks two independent discretizations.
    """
    radius = math.exp(-sol.log_epsilon)
    n = graded_node_count(radius, core_scale, node_step)
    grid = make_graded_grid(n, radius, core_scale)
    ratio, _ = sol.normalized_at_rescaled(grid.nodes)
    V = np.minimum(guarded_power(ratio, sol.p - 1.0), 1.0)
    return first_eigenpair(assemble(grid, V), tol=tol)


def rescaled_eigenvalue(sol: StationarySolution, pair: EigenPair) -> float:
    """``eps^2 * lambda_1(p)``."""
    return pair.eigenvalue * math.exp(2.0 * sol.log_epsilon)


def rescaled_eigenfunction(sol: StationarySolution, pair: EigenPair, target_grid: RadialGrid) -> RescaledProfile:
    """``eps * phi(eps x)`` on ``target_grid``, zero beyond ``1/eps``."""
    log_eps = sol.log_epsilon
    if math.log(target_grid.outer_radius) > -log_eps + 1e-12:
        raise ValueError("target grid exceeds the rescaled domain")
    eps = math.exp(log_eps)
    x_nodes = pair.grid.nodes / eps
    values = pair.eigenfunction * eps
    spline = CubicSpline(x_nodes, values, bc_type=((1, 0.0), "not-a-knot"))
    x = target_grid.nodes
    out = np.where(x <= x_nodes[-1], spline(np.minimum(x, x_nodes[-1])), 0.0)
    out = np.maximum(out, 0.0)
    return RescaledProfile(target_grid, out, ProfileKind.EIGENFUNCTION, sol.p, sol.K, domain_radius=x_nodes[-1])


def rayleigh(w, potential, grid: RadialGrid) -> float:
    """``int (|w'|^2 - W w^2)`` with a finite-difference ``w'``."""
    w = np.asarray(w, dtype=float)
    W = np.asarray(potential, dtype=float)
    if w.shape != grid.nodes.shape or W.shape != grid.nodes.shape:
        raise ValueError("w, potential and grid must have matching lengths")
    dw = radial_derivative(grid, w)
    return integrate_disk(grid, dw * dw - W * w * w)
