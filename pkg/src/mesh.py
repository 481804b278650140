"""
Uniform space-time grids, grid coarsening and the fine/coarse transfer operators
(injection restriction, direction-by-direction cubic-spline prolongation).

Unknowns live on interior nodes only. A field on a grid is a flat float vector of
length ``nx * ny`` ordered row-major with the y index outer, i.e. ``u[j * nx + i]``
holds the value at interior node ``(x_{i+1}, y_{j+1})``.
"""

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

log = logging.getLogger(__name__)

# One spatial snapshot, length nx * ny.
Field = np.ndarray

# boundary(x, y) -> values, evaluated elementwise on numpy arrays.
BoundaryFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GridSpec:
    """
    Uniform Cartesian space-time grid.

    ``nx`` and ``ny`` count interior nodes, ``nt`` counts time levels after t = 0.
    """

    x_left: float
    x_right: float
    y_left: float
    y_right: float
    t_final: float
    nx: int
    ny: int
    nt: int

    def __post_init__(self):
        for name in ("nx", "ny", "nt"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {value!r}.")
        if not self.x_right > self.x_left:
            raise ValueError(
                f"x_right ({self.x_right}) must exceed x_left ({self.x_left})."
            )
        if not self.y_right > self.y_left:
            raise ValueError(
                f"y_right ({self.y_right}) must exceed y_left ({self.y_left})."
            )
        if not self.t_final > 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}.")

    @property
    def hx(self) -> float:
        return (self.x_right - self.x_left) / (self.nx + 1)

    @property
    def hy(self) -> float:
        return (self.y_right - self.y_left) / (self.ny + 1)

    @property
    def tau(self) -> float:
        return self.t_final / self.nt

    @property
    def ns(self) -> int:
        return self.nx * self.ny

    @property
    def shape(self) -> tuple[int, int]:
        """Shape of a field reshaped to 2-D, (ny, nx)."""
        return self.ny, self.nx

    def x_nodes(self) -> np.ndarray:
        return self.x_left + self.hx * np.arange(1, self.nx + 1)

    def y_nodes(self) -> np.ndarray:
        return self.y_left + self.hy * np.arange(1, self.ny + 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Interior node coordinates as two flat arrays in field order."""
        x, y = np.meshgrid(self.x_nodes(), self.y_nodes())
        return x.ravel(), y.ravel()

    def time(self, n: int) -> float:
        return n * self.tau

    def t_levels(self) -> np.ndarray:
        return self.tau * np.arange(self.nt + 1)

    def same_extents(self, other: "GridSpec") -> bool:
        return bool(
            np.isclose(self.x_left, other.x_left)
            and np.isclose(self.x_right, other.x_right)
            and np.isclose(self.y_left, other.y_left)
            and np.isclose(self.y_right, other.y_right)
            and np.isclose(self.t_final, other.t_final)
        )

    def check_field(self, values, name: str = "field") -> Field:
        """Return ``values`` as a float vector, raising if it does not conform."""
        field = np.asarray(values, dtype=float)
        if field.shape != (self.ns,):
            raise ValueError(
                f"{name} has shape {field.shape}, expected ({self.ns},) for a "
                f"{self.nx}x{self.ny} grid."
            )
        if not np.all(np.isfinite(field)):
            raise ValueError(f"{name} contains non-finite entries.")
        return field


@dataclass
class SpaceTimeSolution:
    """Initial field plus the ``nt`` time levels that follow it."""

    initial: Field
    levels: np.ndarray  # (nt, ns)

    @property
    def nt(self) -> int:
        return self.levels.shape[0]

    def level(self, n: int) -> Field:
        """Time level ``n``, where level 0 is the initial field."""
        return self.initial if n == 0 else self.levels[n - 1]

    def stacked(self) -> np.ndarray:
        """All nt + 1 levels as one (nt + 1, ns) array."""
        return np.vstack([self.initial[None, :], self.levels])

    def copy(self) -> "SpaceTimeSolution":
        return SpaceTimeSolution(self.initial.copy(), self.levels.copy())

    def validate(self, grid: GridSpec) -> None:
        grid.check_field(self.initial, "initial field")
        if self.levels.shape != (grid.nt, grid.ns):
            raise ValueError(
                f"levels have shape {self.levels.shape}, expected "
                f"({grid.nt}, {grid.ns})."
            )
        if not np.all(np.isfinite(self.levels)):
            raise ValueError("solution levels contain non-finite entries.")

    def max_abs_diff(self, other: "SpaceTimeSolution") -> float:
        return float(np.max(np.abs(self.levels - other.levels), initial=0.0))

    @classmethod
    def constant_in_time(cls, initial: Field, nt: int) -> "SpaceTimeSolution":
        return cls(initial.copy(), np.tile(initial, (nt, 1)))


def make_grid(
    x_left: float,
    x_right: float,
    y_left: float,
    y_right: float,
    t_final: float,
    nx: int,
    ny: int,
    nt: int,
) -> GridSpec:
    return GridSpec(x_left, x_right, y_left, y_right, t_final, nx, ny, nt)


def coarsen_grid(grid: GridSpec, cf_space: int, cf_time: int) -> GridSpec:
    """
    Coarsen a grid by ``cf_space`` in each spatial direction and ``cf_time`` in time.

    Parameters
    ----------
    grid
        The fine grid.
    cf_space
        Spatial factor. The coarse grid has ``nx // cf_space`` interior nodes in x
        (same in y). When ``nx + 1`` is divisible by ``cf_space`` the coarse nodes
        coincide with every ``cf_space``-th fine node and injection is defined.
    cf_time
        Temporal factor, must divide ``nt``.

    Returns
    -------
    GridSpec
        The coarse grid on the same physical extents.
    """
    if cf_space < 1 or cf_time < 1:
        raise ValueError(
            f"coarsening factors must be >= 1, got cf_space={cf_space}, "
            f"cf_time={cf_time}."
        )
    if grid.nt % cf_time:
        raise ValueError(f"cf_time={cf_time} does not divide nt={grid.nt}.")
    nx, ny = grid.nx // cf_space, grid.ny // cf_space
    if nx < 1 or ny < 1:
        raise ValueError(
            f"cf_space={cf_space} leaves an empty coarse grid for "
            f"{grid.nx}x{grid.ny} interior nodes."
        )
    return GridSpec(
        grid.x_left,
        grid.x_right,
        grid.y_left,
        grid.y_right,
        grid.t_final,
        nx,
        ny,
        grid.nt // cf_time,
    )


def is_nested(n_interior: int, cs: int) -> bool:
    """Whether every ``cs``-th fine node (from index ``cs``) forms a coarse grid."""
    return cs >= 1 and (n_interior + 1) % cs == 0 and (n_interior + 1) // cs >= 2


def nested_indices(n_interior: int, cs: int) -> np.ndarray:
    """0-based fine indices of the coarse interior nodes: cs, 2cs, ... (1-based)."""
    if not is_nested(n_interior, cs):
        raise ValueError(
            f"{n_interior} interior nodes cannot be coarsened by {cs}: "
            f"{n_interior + 1} is not a multiple of {cs} leaving a coarse interior."
        )
    return np.arange(cs - 1, n_interior, cs)


def restrict_injection(fine: Field, fine_grid: GridSpec, cs: int) -> Field:
    """
    Restrict a fine field by injection: each coarse node takes the value of the
    fine node it coincides with.
    """
    fine = fine_grid.check_field(fine, "fine field")
    if cs == 1:
        return fine.copy()
    rows = nested_indices(fine_grid.ny, cs)
    cols = nested_indices(fine_grid.nx, cs)
    return fine.reshape(fine_grid.shape)[np.ix_(rows, cols)].ravel()


def _knot_positions(n_coarse: int, n_fine: int) -> np.ndarray:
    # Coarse knots (edges included) in units of fine spacing; integers when nested.
    ratio = (n_fine + 1) / (n_coarse + 1)
    if float(ratio).is_integer():
        return np.arange(n_coarse + 2, dtype=float) * ratio
    return np.linspace(0.0, n_fine + 1.0, n_coarse + 2)


def prolong_cubic_spline(
    coarse: Field,
    coarse_grid: GridSpec,
    fine_grid: GridSpec,
    boundary: BoundaryFunction | None = None,
) -> Field:
    """
    Interpolate a coarse field to a fine grid with natural cubic splines, first
    along x for every coarse row, then along y for every fine column.

    Parameters
    ----------
    coarse
        Field on ``coarse_grid``.
    coarse_grid
        Grid of the input field.
    fine_grid
        Target grid, same physical extents.
    boundary
        ``boundary(x, y)`` supplying the edge knots of each 1-D pass. ``None`` means
        zero edges, which is what Newton updates with fixed Dirichlet data need.

    Returns
    -------
    Field
        The interpolated fine field.
    """
    coarse = coarse_grid.check_field(coarse, "coarse field")
    if not coarse_grid.same_extents(fine_grid):
        raise ValueError("coarse and fine grids must share physical extents.")

    if boundary is None:
        def boundary(x, y):
            return np.zeros(np.broadcast(x, y).shape)

    kx = _knot_positions(coarse_grid.nx, fine_grid.nx)
    ky = _knot_positions(coarse_grid.ny, fine_grid.ny)
    if kx.size < 2 or ky.size < 2:
        raise ValueError("cubic-spline prolongation needs at least 2 knots per pass.")

    values = coarse.reshape(coarse_grid.shape)
    yc = coarse_grid.y_nodes()
    xf = fine_grid.x_nodes()

    # x pass on coarse rows
    rows = np.empty((coarse_grid.ny, coarse_grid.nx + 2))
    rows[:, 0] = boundary(np.full_like(yc, fine_grid.x_left), yc)
    rows[:, -1] = boundary(np.full_like(yc, fine_grid.x_right), yc)
    rows[:, 1:-1] = values
    along_x = CubicSpline(kx, rows, axis=1, bc_type="natural")(
        np.arange(1, fine_grid.nx + 1, dtype=float)
    )

    # y pass on fine columns
    cols = np.empty((coarse_grid.ny + 2, fine_grid.nx))
    cols[0] = boundary(xf, np.full_like(xf, fine_grid.y_left))
    cols[-1] = boundary(xf, np.full_like(xf, fine_grid.y_right))
    cols[1:-1] = along_x
    fine = CubicSpline(ky, cols, axis=0, bc_type="natural")(
        np.arange(1, fine_grid.ny + 1, dtype=float)
    )
    return fine.ravel()


def interpolate_in_time(
    levels: np.ndarray, t_coarse: np.ndarray, t_fine: np.ndarray
) -> np.ndarray:
    """
    Natural cubic spline in t through ``levels`` (one row per coarse time), evaluated
    at ``t_fine`` for every spatial node.
    """
    if len(t_coarse) < 2:
        raise ValueError("time interpolation needs at least 2 time levels.")
    return CubicSpline(t_coarse, levels, axis=0, bc_type="natural")(t_fine)
