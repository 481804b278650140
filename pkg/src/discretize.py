"""
Central-difference spatial discretization on interior nodes, the backward-Euler
level residual and the exact banded Newton Jacobian ``A = I + tau * dF/du``.

Dirichlet neighbours of near-boundary nodes are taken from the boundary data at the
level time, so the boundary source vector q is folded into F. Half-point viscosity
is the mean of the law at the two neighbours, (mu(u_P) + mu(u_E)) / 2.
"""

import logging

import numpy as np

from bandlinalg import BandedMatrix
from mesh import Field, GridSpec
from model import (
    BoundaryData,
    ProblemSpec,
    boundary_field,
    flux,
    flux_derivative,
    viscosity,
    viscosity_derivative,
)

log = logging.getLogger(__name__)

# r^n of one time level at the current Newton iterate, length ns.
LevelResidual = np.ndarray


def _padded(grid: GridSpec, u: Field, boundary: BoundaryData) -> np.ndarray:
    # (ny + 2, nx + 2) array with the Dirichlet ring; corners never enter the stencil
    padded = np.zeros((grid.ny + 2, grid.nx + 2))
    padded[1:-1, 1:-1] = u.reshape(grid.shape)
    padded[1:-1, 0] = boundary.left
    padded[1:-1, -1] = boundary.right
    padded[0, 1:-1] = boundary.bottom
    padded[-1, 1:-1] = boundary.top
    return padded


def _faces(p: ProblemSpec, left: np.ndarray, right: np.ndarray):
    # face viscosity, its derivatives by the left and right state, jump across the face
    mu = 0.5 * (viscosity(p, left) + viscosity(p, right))
    d_left = 0.5 * viscosity_derivative(p, left)
    d_right = 0.5 * viscosity_derivative(p, right)
    return mu, d_left, d_right, right - left


def spatial_operator_F(
    p: ProblemSpec,
    grid: GridSpec,
    u: Field,
    t: float,
    boundary: BoundaryData | None = None,
) -> Field:
    """
    Discrete inviscid plus viscous operator F(u) at time ``t``.

    Parameters
    ----------
    p
        Problem definition.
    grid
        Grid the field lives on.
    u
        Interior values.
    t
        Time of the Dirichlet data.
    boundary
        Edge values overriding the exact-solution data, for diagnostics.

    Returns
    -------
    Field
        F(u), same layout as ``u``.
    """
    u = grid.check_field(u, "u")
    if boundary is None:
        boundary = boundary_field(p, grid, t)
    padded = _padded(grid, u, boundary)
    f, g = flux(p, padded)

    convection = (f[1:-1, 2:] - f[1:-1, :-2]) / (2.0 * grid.hx) + (
        g[2:, 1:-1] - g[:-2, 1:-1]
    ) / (2.0 * grid.hy)

    mu_x, _, _, jump_x = _faces(p, padded[1:-1, :-1], padded[1:-1, 1:])
    mu_y, _, _, jump_y = _faces(p, padded[:-1, 1:-1], padded[1:, 1:-1])
    flux_x = mu_x * jump_x
    flux_y = mu_y * jump_y
    diffusion = (flux_x[:, 1:] - flux_x[:, :-1]) / grid.hx**2 + (
        flux_y[1:, :] - flux_y[:-1, :]
    ) / grid.hy**2

    return (convection - diffusion).ravel()


def bdf1_residual(
    p: ProblemSpec,
    grid: GridSpec,
    u_n: Field,
    u_prev: Field,
    t_n: float,
    tau: float | None = None,
    boundary: BoundaryData | None = None,
) -> LevelResidual:
    """r = q - (u_n - u_prev) / tau - F(u_n), with q inside F's boundary terms."""
    tau = grid.tau if tau is None else tau
    u_prev = grid.check_field(u_prev, "u_prev")
    return -(u_n - u_prev) / tau - spatial_operator_F(p, grid, u_n, t_n, boundary)


def newton_rhs(
    p: ProblemSpec,
    grid: GridSpec,
    u_n: Field,
    u_prev: Field,
    t_n: float,
    tau: float | None = None,
) -> np.ndarray:
    """tau * r, the right-hand side matching A = I + tau dF/du."""
    tau = grid.tau if tau is None else tau
    return tau * bdf1_residual(p, grid, u_n, u_prev, t_n, tau)


def coarse_rhs(
    p: ProblemSpec,
    coarse_grid: GridSpec,
    u_end: Field,
    u_start: Field,
    t: float,
    dt: float,
) -> np.ndarray:
    """Coarse-interval right-hand side dt * r^c at restricted fine states."""
    return newton_rhs(p, coarse_grid, u_end, u_start, t, dt)


def assemble_jacobian(
    p: ProblemSpec,
    grid: GridSpec,
    u: Field,
    t: float,
    tau: float,
    boundary: BoundaryData | None = None,
) -> BandedMatrix:
    """
    Exact Jacobian of ``u + tau * F(u)`` in band storage with half-bandwidth nx
    (capped at ns - 1 for single-row grids).
    """
    u = grid.check_field(u, "u")
    if tau < 0:
        raise ValueError(f"tau must be non-negative, got {tau}.")
    if boundary is None:
        boundary = boundary_field(p, grid, t)
    nx, ny, ns = grid.nx, grid.ny, grid.ns
    padded = _padded(grid, u, boundary)
    df, dg = flux_derivative(p, padded)

    mu, dl, dr, jump = _faces(p, padded[1:-1, :-1], padded[1:-1, 1:])
    east = (dr[:, 1:] * jump[:, 1:] + mu[:, 1:]) / grid.hx**2
    west = (-dl[:, :-1] * jump[:, :-1] + mu[:, :-1]) / grid.hx**2
    centre_x = (
        dl[:, 1:] * jump[:, 1:] - mu[:, 1:] - dr[:, :-1] * jump[:, :-1] - mu[:, :-1]
    ) / grid.hx**2

    mu, dl, dr, jump = _faces(p, padded[:-1, 1:-1], padded[1:, 1:-1])
    north = (dr[1:, :] * jump[1:, :] + mu[1:, :]) / grid.hy**2
    south = (-dl[:-1, :] * jump[:-1, :] + mu[:-1, :]) / grid.hy**2
    centre_y = (
        dl[1:, :] * jump[1:, :] - mu[1:, :] - dr[:-1, :] * jump[:-1, :] - mu[:-1, :]
    ) / grid.hy**2

    # dF/du entries per neighbour, (ny, nx) each
    j_east = df[1:-1, 2:] / (2.0 * grid.hx) - east
    j_west = -df[1:-1, :-2] / (2.0 * grid.hx) - west
    j_north = dg[2:, 1:-1] / (2.0 * grid.hy) - north
    j_south = -dg[:-2, 1:-1] / (2.0 * grid.hy) - south
    j_centre = -(centre_x + centre_y)

    # Dirichlet neighbours are not unknowns
    j_east[:, -1] = 0.0
    j_west[:, 0] = 0.0
    j_north[-1, :] = 0.0
    j_south[0, :] = 0.0

    bw = min(nx, ns - 1)
    jac = BandedMatrix.identity(ns, bw)
    data = jac.data
    data[:, bw] += tau * j_centre.ravel()
    if bw > 0:
        # += so that offsets +-1 and +-nx may coincide when nx == 1
        data[:, bw + 1] += tau * j_east.ravel()
        data[:, bw - 1] += tau * j_west.ravel()
        if ny > 1:
            data[:, bw + nx] += tau * j_north.ravel()
            data[:, bw - nx] += tau * j_south.ravel()
    return jac
