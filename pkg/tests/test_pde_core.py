"""순방향 풀이기: 질량 보존, 공간 균질 해, 2차 수렴, 안정성 검사"""

import math
import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import solve_ivp
from rdopt.errors import BlowUpError, ConfigurationError, ConstraintError, MemoryBudgetError
from rdopt.models.grid import Grid1D, Grid2D, ScalarField, TimeConfig
from rdopt.models.reaction import ReactionModel
from rdopt.services import pde_core
from rdopt.services.initial_data import interval_fractions, rasterize_interval

ZERO = ReactionModel.cubic_custom(0.0, 0.0, 0.0, 0.0)


def test_heat_flow_conserves_mass(interval_grid, rng):
    u0 = ScalarField(grid=interval_grid, values=rng.uniform(0.0, 1.0, interval_grid.n))
    traj = pde_core.forward_solve(u0, ZERO, TimeConfig(T=1.0, nt=100))
    assert math.isclose(pde_core.mass(traj.final), pde_core.mass(u0), rel_tol=1e-10)


def test_periodic_heat_flow_conserves_mass_and_decays_cosine():
    grid = Grid1D(xmin=-math.pi, xmax=math.pi, n=200, boundary="periodic")
    x = grid.nodes()
    u0 = ScalarField(grid=grid, values=0.5 + 0.25 * np.cos(x))
    traj = pde_core.forward_solve(u0, ZERO, TimeConfig(T=0.5, nt=500))

    assert math.isclose(pde_core.mass(traj.final), pde_core.mass(u0), rel_tol=1e-10)
    assert_allclose(traj.final.values, 0.5 + 0.25 * math.exp(-0.5) * np.cos(x), atol=1e-4)


def test_constant_data_follows_the_reaction_ode(bistable):
    grid = Grid1D(xmin=0.0, xmax=10.0, n=21)
    u0 = ScalarField.constant(grid, 0.6)
    traj = pde_core.forward_solve(u0, bistable, TimeConfig(T=2.0, nt=2000))

    ode = solve_ivp(lambda t, v: bistable.f(v), (0.0, 2.0), [0.6], rtol=1e-11, atol=1e-12)
    expected = float(ode.y[0, -1])
    assert np.ptp(traj.final.values) < 1e-12
    assert math.isclose(float(traj.final.values[0]), expected, rel_tol=1e-4)


def test_second_order_convergence_with_forcing(bistable):
    def exact(t, x):
        return 0.5 + 0.25 * np.cos(x) * np.exp(-t)

    def forcing(t, x):
        # u_t - Δu = 0 이므로 s = -f(u_exact)
        return -bistable.f(exact(t, x))

    errors = []
    for n, nt in ((41, 40), (81, 80), (161, 160)):
        grid = Grid1D(xmin=0.0, xmax=math.pi, n=n)
        x = grid.nodes()
        u0 = ScalarField(grid=grid, values=exact(0.0, x))
        traj = pde_core.forward_solve(u0, bistable, TimeConfig(T=1.0, nt=nt), forcing=forcing)
        errors.append(float(np.max(np.abs(traj.final.values - exact(1.0, x)))))

    order = math.log2(errors[1] / errors[2])
    assert abs(order - 2.0) < 0.3


def test_block_stays_within_maximum_principle_band(bistable):
    grid = Grid1D(xmin=-20.0, xmax=20.0, n=201)
    tc = TimeConfig(T=10.0, nt=1000)
    traj = pde_core.forward_solve(rasterize_interval(grid, -3.0, 3.0), bistable, tc)
    band = 10.0 * tc.max_step()
    assert traj.min_value >= -band
    assert traj.max_value <= 1.0 + band


def test_adi_keeps_y_invariant_data_y_invariant(bistable):
    grid = Grid2D(xmin=0.0, xmax=10.0, ymin=0.0, ymax=5.0, nx=41, ny=21)
    frac = interval_fractions(grid.x_grid, 3.0, 7.0)
    u0 = ScalarField(grid=grid, values=np.tile(frac, (grid.ny, 1)))
    traj = pde_core.forward_solve_2d(u0, bistable, TimeConfig(T=2.0, nt=40))

    spread_along_y = np.max(np.ptp(traj.values, axis=1))
    assert spread_along_y < 1e-10


def test_adi_heat_flow_conserves_mass(rng):
    grid = Grid2D(xmin=-5.0, xmax=5.0, ymin=-5.0, ymax=5.0, nx=31, ny=31)
    u0 = ScalarField(grid=grid, values=rng.uniform(0.0, 1.0, grid.shape))
    traj = pde_core.forward_solve_2d(u0, ZERO, TimeConfig(T=1.0, nt=50))
    assert math.isclose(pde_core.mass(traj.final), pde_core.mass(u0), rel_tol=1e-10)


def test_stability_envelope_rejects_large_time_steps(interval_grid, bistable):
    u0 = ScalarField.constant(interval_grid, 0.5)
    with pytest.raises(ConfigurationError, match="stability envelope"):
        pde_core.forward_solve(u0, bistable, TimeConfig(T=10.0, nt=10))


def test_stiff_reaction_is_rejected(bistable):
    grid = Grid1D(xmin=0.0, xmax=math.pi, n=5)
    with pytest.raises(ConfigurationError, match="exceeds 1"):
        pde_core.forward_solve(ScalarField.constant(grid, 0.5), bistable, TimeConfig(T=8.0, nt=10))


def test_blow_up_is_reported_with_step():
    grid = Grid1D(xmin=0.0, xmax=math.pi, n=5)
    model = ReactionModel.convex_power(2.0)
    # v' = v²/2, v(0) = 1 은 t = 2 에서 폭발
    with pytest.raises(BlowUpError) as excinfo:
        pde_core.forward_solve(ScalarField.constant(grid, 1.0), model, TimeConfig(T=2.5, nt=2500))
    assert 0 < excinfo.value.step <= 2500
    assert excinfo.value.time < 2.5


def test_guard_finite_names_the_step():
    with pytest.raises(BlowUpError, match="step 4"):
        pde_core.guard_finite(np.array([0.0, 2e3]), step=4, time=0.5)


def test_initial_values_outside_unit_interval_are_rejected(interval_grid, bistable):
    u0 = ScalarField.constant(interval_grid, 1.5)
    with pytest.raises(ConstraintError):
        pde_core.forward_solve(u0, bistable, TimeConfig(T=1.0, nt=100))


def test_memory_cap_is_enforced(monkeypatch, interval_grid, bistable):
    monkeypatch.setenv("MEMORY_CAP_GIB", "1e-6")
    u0 = ScalarField.constant(interval_grid, 0.5)
    with pytest.raises(MemoryBudgetError):
        pde_core.forward_solve(u0, bistable, TimeConfig(T=1.0, nt=1000))


@pytest.mark.parametrize("level", [0.0, 1.0])
def test_equilibria_stay_fixed(interval_grid, bistable, level):
    u0 = ScalarField.constant(interval_grid, level)
    traj = pde_core.forward_solve(u0, bistable, TimeConfig(T=2.0, nt=200))
    assert np.max(np.abs(traj.values - level)) <= 1e-12

    grid = Grid2D(xmin=0.0, xmax=4.0, ymin=0.0, ymax=4.0, nx=17, ny=17)
    traj_2d = pde_core.forward_solve_2d(ScalarField.constant(grid, level), bistable, TimeConfig(T=1.0, nt=50))
    assert np.max(np.abs(traj_2d.values - level)) <= 1e-12


def test_adi_matches_one_dimensional_solver_on_x_only_data(bistable):
    grid = Grid2D(xmin=0.0, xmax=10.0, ymin=0.0, ymax=3.0, nx=41, ny=13)
    x = grid.x_grid.nodes()
    profile = 0.5 + 0.3 * np.cos(math.pi * x / 10.0)
    tc = TimeConfig(T=1.0, nt=200)

    line = pde_core.forward_solve(ScalarField(grid=grid.x_grid, values=profile), bistable, tc)
    plane = pde_core.forward_solve_2d(
        ScalarField(grid=grid, values=np.tile(profile, (grid.ny, 1))), bistable, tc
    )

    # 두 스킴 모두 시간 2차, 차이는 O(dt²)
    for row in plane.final.values:
        assert_allclose(row, line.final.values, atol=1e-3)
