import numpy as np
import pytest

from model import (
    ProblemKind,
    ProblemSpec,
    Side,
    boundary_field,
    boundary_value,
    default_grid,
    exact_field,
    exact_solution,
    flux,
    flux_derivative,
    grid_from_points,
    initial_field,
    viscosity,
    viscosity_derivative,
)


def test_constructors_and_names():
    heat = ProblemSpec.heat()
    assert heat.kind is ProblemKind.NONLINEAR_HEAT
    assert heat.mu0 == 1e-6
    assert heat.is_heat
    burgers = ProblemSpec.from_name("burgers", mu0=2e-3)
    assert burgers.kind is ProblemKind.BURGERS
    assert burgers.mu0 == 2e-3
    with pytest.raises(ValueError):
        ProblemSpec.from_name("wave")


@pytest.mark.parametrize(
    "build",
    [
        lambda: ProblemSpec.heat(mu0=-1.0),
        lambda: ProblemSpec.heat(alpha=0.0),
        lambda: ProblemSpec.burgers(shock_speed=0.0),
    ],
)
def test_invalid_parameters(build):
    with pytest.raises(ValueError):
        build()


def test_heat_exact_solution():
    p = ProblemSpec.heat()
    value = exact_solution(p, 0.1, 0.1, 0.0)
    assert value == pytest.approx(np.sqrt(1000.0 * 0.2 + 1.0))
    later = exact_solution(p, 0.1, 0.1, 1.0)
    assert later == pytest.approx(np.sqrt(202.0))


def test_burgers_exact_solution_on_the_shock_line():
    p = ProblemSpec.burgers()
    # x + y = v t gives half the jump
    assert exact_solution(p, 0.1, 0.15, 0.5) == pytest.approx(0.25)
    assert exact_solution(p, -0.5, -0.5, 0.0) == pytest.approx(0.5)
    assert exact_solution(p, 0.5, 0.5, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_exact_solution_needs_viscosity():
    with pytest.raises(ValueError):
        exact_solution(ProblemSpec.heat(mu0=0.0), 0.5, 0.5, 0.0)
    with pytest.raises(ValueError):
        exact_solution(ProblemSpec.burgers(mu0=0.0), 0.5, 0.5, 0.0)


def test_heat_exact_solution_rejects_negative_radicand():
    with pytest.raises(ValueError, match="radicand"):
        exact_solution(ProblemSpec.heat(), -1.0, -1.0, 0.0)


def _pde_residual(p, x, y, t, h):
    # fourth-order differences of the continuous operator at one point
    def u(dx=0.0, dy=0.0, dt=0.0):
        return float(exact_solution(p, x + dx, y + dy, t + dt))

    def d1(fn, step):
        return (-fn(2 * step) + 8 * fn(step) - 8 * fn(-step) + fn(-2 * step)) / (
            12 * h
        )

    u_t = d1(lambda s: u(dt=s), h)
    if p.is_heat:
        # (mu u_x)_x = (mu0 u^3 / 3)_xx
        def phi(dx=0.0, dy=0.0):
            return p.mu0 * u(dx, dy) ** 3 / 3.0
    else:
        def phi(dx=0.0, dy=0.0):
            return p.mu0 * u(dx, dy)

    lap = (
        phi(dx=h) + phi(dx=-h) + phi(dy=h) + phi(dy=-h) - 4 * phi()
    ) / h**2
    convection = 0.0
    if not p.is_heat:
        convection = d1(lambda s: 0.5 * u(dx=s) ** 2, h) + d1(
            lambda s: 0.5 * u(dy=s) ** 2, h
        )
    return u_t + convection - lap


@pytest.mark.parametrize(
    "p, point",
    [
        (ProblemSpec.heat(), (0.4, 0.7, 0.3)),
        (ProblemSpec.burgers(mu0=0.05), (0.1, -0.05, 0.2)),
    ],
)
def test_exact_solutions_satisfy_the_pde(p, point):
    coarse = abs(_pde_residual(p, *point, 1e-2))
    fine = abs(_pde_residual(p, *point, 5e-3))
    assert fine < 1e-4
    assert fine <= coarse + 1e-9


def test_fluxes_and_viscosity():
    u = np.array([0.0, 1.0, 2.0])
    heat = ProblemSpec.heat(mu0=0.5)
    f, g = flux(heat, u)
    np.testing.assert_array_equal(f, 0.0)
    np.testing.assert_array_equal(g, 0.0)
    np.testing.assert_allclose(viscosity(heat, u), [0.0, 0.5, 2.0])
    np.testing.assert_allclose(viscosity_derivative(heat, u), [0.0, 1.0, 2.0])

    linear = ProblemSpec.heat(mu0=0.5, constant_viscosity=True)
    np.testing.assert_allclose(viscosity(linear, u), 0.5)
    np.testing.assert_allclose(viscosity_derivative(linear, u), 0.0)

    burgers = ProblemSpec.burgers(mu0=0.1)
    f, g = flux(burgers, u)
    np.testing.assert_allclose(f, [0.0, 0.5, 2.0])
    np.testing.assert_allclose(g, f)
    df, dg = flux_derivative(burgers, u)
    np.testing.assert_allclose(df, u)
    np.testing.assert_allclose(viscosity(burgers, u), 0.1)


def test_default_domains():
    heat = default_grid(ProblemSpec.heat(), 30, 4, 4)
    assert (heat.x_left, heat.x_right, heat.t_final) == (0.1, 1.1, 1.0)
    assert heat.hx == pytest.approx(0.2)
    burgers = default_grid(ProblemSpec.burgers(), 30, 7, 7)
    assert (burgers.x_left, burgers.x_right) == (-0.3, 0.7)
    assert burgers.hx == pytest.approx(0.125)


def test_grids_labelled_by_points():
    heat = grid_from_points(ProblemSpec.heat(), 30, 4, 4)
    assert (heat.nx, heat.ny, heat.nt) == (2, 2, 30)
    assert heat.hx == pytest.approx(1 / 3)
    # refinement levels of the tables halve the spacing
    spacings = [
        grid_from_points(ProblemSpec.burgers(), nt, n, n).hx
        for nt, n in [(60, 11), (120, 21), (240, 41)]
    ]
    np.testing.assert_allclose(spacings, [0.1, 0.05, 0.025])
    with pytest.raises(ValueError, match="3 points"):
        grid_from_points(ProblemSpec.heat(), 30, 2, 4)


def test_boundary_data_matches_exact_solution():
    p = ProblemSpec.heat()
    grid = default_grid(p, 10, 4, 3)
    data = boundary_field(p, grid, 0.5)
    assert data.left.shape == (3,)
    assert data.bottom.shape == (4,)
    np.testing.assert_allclose(
        data.left, exact_solution(p, grid.x_left, grid.y_nodes(), 0.5)
    )
    np.testing.assert_allclose(
        data.top, exact_solution(p, grid.x_nodes(), grid.y_right, 0.5)
    )
    np.testing.assert_allclose(
        boundary_value(p, grid, Side.RIGHT, [0.3], 0.5),
        exact_solution(p, grid.x_right, 0.3, 0.5),
    )


def test_initial_field_is_exact_at_t0():
    p = ProblemSpec.burgers()
    grid = default_grid(p, 10, 5, 5)
    np.testing.assert_array_equal(initial_field(p, grid), exact_field(p, grid, 0.0))
