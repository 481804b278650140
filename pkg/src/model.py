"""
Problem definitions: the 2-D nonlinear heat equation and the 2-D viscous Burgers
equation written as one scalar conservation law

    u_t + f(u)_x + g(u)_y = (mu(u) u_x)_x + (mu(u) u_y)_y

with Dirichlet data and initial values taken from closed-form exact solutions.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from mesh import Field, GridSpec

log = logging.getLogger(__name__)


class ProblemKind(str, Enum):
    NONLINEAR_HEAT = "heat"
    BURGERS = "burgers"


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    BOTTOM = "bottom"
    TOP = "top"


@dataclass(frozen=True)
class ProblemSpec:
    """
    Parameters of one test problem.

    ``mu0`` is the coefficient of the heat law mu = mu0 * u**2, or the constant
    Burgers viscosity. ``mu0 = 0`` is accepted as an inviscid / zero-diffusion
    diagnostic setting. ``constant_viscosity`` replaces the heat law by mu = mu0,
    which makes the heat problem linear.
    """

    kind: ProblemKind
    mu0: float
    alpha: float = 1.0
    shock_speed: float = 0.5
    constant_viscosity: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", ProblemKind(self.kind))
        if not self.mu0 >= 0:
            raise ValueError(f"mu0 must be non-negative, got {self.mu0}.")
        if self.kind is ProblemKind.NONLINEAR_HEAT and not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}.")
        if self.kind is ProblemKind.BURGERS and self.shock_speed == 0:
            raise ValueError("shock_speed must be non-zero.")

    @classmethod
    def heat(
        cls, mu0: float = 1e-6, alpha: float = 1.0, constant_viscosity: bool = False
    ) -> "ProblemSpec":
        return cls(
            ProblemKind.NONLINEAR_HEAT,
            mu0,
            alpha=alpha,
            constant_viscosity=constant_viscosity,
        )

    @classmethod
    def burgers(cls, mu0: float = 1e-3, shock_speed: float = 0.5) -> "ProblemSpec":
        return cls(ProblemKind.BURGERS, mu0, shock_speed=shock_speed)

    @classmethod
    def from_name(cls, name: str, **overrides) -> "ProblemSpec":
        kind = ProblemKind(name)
        if kind is ProblemKind.NONLINEAR_HEAT:
            return cls.heat(**overrides)
        return cls.burgers(**overrides)

    @property
    def is_heat(self) -> bool:
        return self.kind is ProblemKind.NONLINEAR_HEAT


@dataclass
class BoundaryData:
    """Dirichlet values on the four edges at one time, at the interior coordinates."""

    left: np.ndarray  # (ny,) at x_left
    right: np.ndarray  # (ny,) at x_right
    bottom: np.ndarray  # (nx,) at y_left
    top: np.ndarray  # (nx,) at y_right


def default_domain(p: ProblemSpec) -> tuple[float, float, float, float, float]:
    """(x_left, x_right, y_left, y_right, t_final) used by the experiments."""
    if p.is_heat:
        return 0.1, 1.1, 0.1, 1.1, 1.0
    # the shock line x + y = v t sweeps x + y in [0, 0.5] well inside the window
    return -0.3, 0.7, -0.3, 0.7, 1.0


def default_grid(p: ProblemSpec, nt: int, nx: int, ny: int) -> GridSpec:
    x_left, x_right, y_left, y_right, t_final = default_domain(p)
    return GridSpec(x_left, x_right, y_left, y_right, t_final, nx, ny, nt)


def grid_from_points(p: ProblemSpec, nt: int, px: int, py: int) -> GridSpec:
    """
    Grid labelled by its points per direction, boundary points included, the way the
    refinement tables count them. ``px`` points leave ``px - 2`` interior unknowns
    and a spacing of (x_right - x_left) / (px - 1).
    """
    if px < 3 or py < 3:
        raise ValueError(
            f"a grid needs at least 3 points per direction, got {px}x{py}."
        )
    return default_grid(p, nt, px - 2, py - 2)


def flux(p: ProblemSpec, u):
    """Inviscid fluxes (f, g)."""
    u = np.asarray(u, dtype=float)
    if p.is_heat:
        zero = np.zeros_like(u)
        return zero, zero.copy()
    f = 0.5 * u * u
    return f, f.copy()


def flux_derivative(p: ProblemSpec, u):
    u = np.asarray(u, dtype=float)
    if p.is_heat:
        zero = np.zeros_like(u)
        return zero, zero.copy()
    return u.copy(), u.copy()


def viscosity(p: ProblemSpec, u):
    u = np.asarray(u, dtype=float)
    if p.is_heat and not p.constant_viscosity:
        return p.mu0 * u * u
    return np.full_like(u, p.mu0)


def viscosity_derivative(p: ProblemSpec, u):
    u = np.asarray(u, dtype=float)
    if p.is_heat and not p.constant_viscosity:
        return 2.0 * p.mu0 * u
    return np.zeros_like(u)


def exact_solution(p: ProblemSpec, x, y, t):
    """
    Closed-form solution, evaluated elementwise.

    Heat: ``sqrt(sqrt(alpha / mu0) * (x + y) + alpha * t + 1)``.
    Burgers: ``v / 2 * (1 - tanh(v * (x + y - v * t) / (4 * mu0)))``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if p.is_heat:
        if p.mu0 == 0:
            raise ValueError("the heat exact solution needs mu0 > 0.")
        radicand = np.sqrt(p.alpha / p.mu0) * (x + y) + p.alpha * t + 1.0
        if np.any(radicand < 0):
            raise ValueError(
                f"heat exact solution undefined: negative radicand "
                f"{float(np.min(radicand))} at t={t}."
            )
        return np.sqrt(radicand)
    v = p.shock_speed
    if p.mu0 == 0:
        raise ValueError("the Burgers exact solution needs mu0 > 0.")
    return 0.5 * v * (1.0 - np.tanh(v * (x + y - v * t) / (4.0 * p.mu0)))


def boundary_value(p: ProblemSpec, grid: GridSpec, side: Side, coordinate, t: float):
    """
    Dirichlet value on one edge; ``coordinate`` is y on the left/right edges and x on
    the bottom/top edges.
    """
    side = Side(side)
    coordinate = np.asarray(coordinate, dtype=float)
    if side is Side.LEFT:
        return exact_solution(p, np.full_like(coordinate, grid.x_left), coordinate, t)
    if side is Side.RIGHT:
        return exact_solution(p, np.full_like(coordinate, grid.x_right), coordinate, t)
    if side is Side.BOTTOM:
        return exact_solution(p, coordinate, np.full_like(coordinate, grid.y_left), t)
    return exact_solution(p, coordinate, np.full_like(coordinate, grid.y_right), t)


def boundary_field(p: ProblemSpec, grid: GridSpec, t: float) -> BoundaryData:
    xs, ys = grid.x_nodes(), grid.y_nodes()
    return BoundaryData(
        left=boundary_value(p, grid, Side.LEFT, ys, t),
        right=boundary_value(p, grid, Side.RIGHT, ys, t),
        bottom=boundary_value(p, grid, Side.BOTTOM, xs, t),
        top=boundary_value(p, grid, Side.TOP, xs, t),
    )


def exact_field(p: ProblemSpec, grid: GridSpec, t: float) -> Field:
    x, y = grid.mesh()
    return exact_solution(p, x, y, t)


def initial_field(p: ProblemSpec, grid: GridSpec) -> Field:
    return exact_field(p, grid, 0.0)
