import numpy as np
import pytest

from mesh import (
    GridSpec,
    SpaceTimeSolution,
    coarsen_grid,
    interpolate_in_time,
    is_nested,
    make_grid,
    nested_indices,
    prolong_cubic_spline,
    restrict_injection,
)


@pytest.fixture
def unit_grid():
    return make_grid(0.0, 1.25, 0.0, 1.25, 1.0, 4, 4, 5)


def test_grid_spacing(unit_grid):
    assert unit_grid.hx == pytest.approx(0.25)
    assert unit_grid.hy == pytest.approx(0.25)
    assert unit_grid.tau == pytest.approx(0.2)
    assert unit_grid.ns == 16
    assert unit_grid.shape == (4, 4)
    np.testing.assert_allclose(unit_grid.x_nodes(), [0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(unit_grid.t_levels(), [0, 0.2, 0.4, 0.6, 0.8, 1.0])


def test_mesh_is_row_major(unit_grid):
    x, y = unit_grid.mesh()
    # u[j * nx + i] sits at (x_{i+1}, y_{j+1})
    assert x[1] == pytest.approx(0.5)
    assert y[1] == pytest.approx(0.25)
    assert x[4] == pytest.approx(0.25)
    assert y[4] == pytest.approx(0.5)


@pytest.mark.parametrize(
    "args",
    [
        (0.0, 1.0, 0.0, 1.0, 1.0, 0, 4, 4),
        (0.0, 1.0, 0.0, 1.0, 1.0, 4, 4, 0),
        (1.0, 0.0, 0.0, 1.0, 1.0, 4, 4, 4),
        (0.0, 1.0, 0.0, 1.0, 0.0, 4, 4, 4),
    ],
)
def test_invalid_grid(args):
    with pytest.raises(ValueError):
        GridSpec(*args)


def test_check_field_rejects_bad_input(unit_grid):
    with pytest.raises(ValueError, match="shape"):
        unit_grid.check_field(np.zeros(15))
    bad = np.zeros(16)
    bad[3] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        unit_grid.check_field(bad)


def test_coarsen_grid():
    grid = make_grid(0.0, 1.0, 0.0, 1.0, 1.0, 7, 7, 8)
    coarse = coarsen_grid(grid, 2, 4)
    assert (coarse.nx, coarse.ny, coarse.nt) == (3, 3, 2)
    assert coarse.hx == pytest.approx(2 * grid.hx)
    assert coarse.tau == pytest.approx(4 * grid.tau)
    assert coarse.same_extents(grid)


def test_coarsen_grid_rejects_bad_factors():
    grid = make_grid(0.0, 1.0, 0.0, 1.0, 1.0, 7, 7, 8)
    with pytest.raises(ValueError):
        coarsen_grid(grid, 1, 3)
    with pytest.raises(ValueError):
        coarsen_grid(grid, 8, 1)
    with pytest.raises(ValueError):
        coarsen_grid(grid, 0, 1)


def test_nesting_rule():
    assert is_nested(7, 2)
    assert is_nested(3, 2)
    assert not is_nested(8, 2)
    assert not is_nested(1, 2)
    np.testing.assert_array_equal(nested_indices(7, 2), [1, 3, 5])
    with pytest.raises(ValueError):
        nested_indices(8, 2)


def test_restriction_picks_coinciding_nodes():
    grid = make_grid(0.0, 1.0, 0.0, 1.0, 1.0, 7, 7, 1)
    fine = np.arange(grid.ns, dtype=float)
    coarse = restrict_injection(fine, grid, 2)
    assert coarse.shape == (9,)
    # fine (i, j) = (1, 1) -> index 8
    assert coarse[0] == 8.0
    assert coarse[-1] == 5 * 7 + 5


def test_restriction_inverts_prolongation_bitwise():
    fine_grid = make_grid(0.0, 1.0, 0.0, 2.0, 1.0, 7, 11, 1)
    coarse_grid = coarsen_grid(fine_grid, 2, 1)
    coarse = np.random.default_rng(3).standard_normal(coarse_grid.ns)
    fine = prolong_cubic_spline(coarse, coarse_grid, fine_grid)
    np.testing.assert_array_equal(restrict_injection(fine, fine_grid, 2), coarse)


def test_prolongation_reproduces_linear_fields():
    fine_grid = make_grid(0.0, 1.0, 0.0, 1.0, 1.0, 15, 15, 1)
    coarse_grid = coarsen_grid(fine_grid, 4, 1)

    def linear(x, y):
        return 1.0 + 2.0 * x - 3.0 * y

    coarse = linear(*coarse_grid.mesh())
    fine = prolong_cubic_spline(coarse, coarse_grid, fine_grid, boundary=linear)
    np.testing.assert_allclose(fine, linear(*fine_grid.mesh()), rtol=0, atol=1e-12)


def test_prolongation_needs_matching_extents():
    fine_grid = make_grid(0.0, 1.0, 0.0, 1.0, 1.0, 7, 7, 1)
    other = make_grid(0.0, 2.0, 0.0, 1.0, 1.0, 3, 3, 1)
    with pytest.raises(ValueError, match="extents"):
        prolong_cubic_spline(np.zeros(9), other, fine_grid)


def test_interpolate_in_time_is_exact_for_linear_histories():
    t_coarse = np.linspace(0.0, 1.0, 4)
    levels = np.outer(t_coarse, [1.0, -2.0]) + 0.5
    t_fine = np.linspace(0.0, 1.0, 13)
    fine = interpolate_in_time(levels, t_coarse, t_fine)
    np.testing.assert_allclose(fine, np.outer(t_fine, [1.0, -2.0]) + 0.5, atol=1e-13)
    with pytest.raises(ValueError):
        interpolate_in_time(levels[:1], t_coarse[:1], t_fine)


def test_space_time_solution(unit_grid):
    initial = np.ones(unit_grid.ns)
    sol = SpaceTimeSolution.constant_in_time(initial, unit_grid.nt)
    sol.validate(unit_grid)
    assert sol.nt == 5
    assert sol.level(0) is sol.initial
    assert sol.stacked().shape == (6, 16)
    other = sol.copy()
    other.levels[2, 3] += 0.5
    assert sol.max_abs_diff(other) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        SpaceTimeSolution(initial, np.ones((4, 16))).validate(unit_grid)
