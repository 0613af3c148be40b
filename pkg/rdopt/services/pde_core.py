"""반응-확산 방정식 u_t - Δu = f(u) (Neumann) 의 순방향 풀이와 목적함수 평가

1D 는 Crank-Nicolson, 2D 는 Peaceman-Rachford ADI 를 쓴다.
반응항은 선형 암시적으로 처리한다: f(u^n) + f'(u^n)(u^{n+1} - u^n)/2.
"""

from collections.abc import Callable
import numpy as np
import structlog
from rdopt.config import get_settings
from rdopt.errors import BlowUpError, ConfigurationError, ConstraintError, MemoryBudgetError
from rdopt.models.grid import Grid, Grid1D, Grid2D, ScalarField, TimeConfig, Trajectory
from rdopt.models.reaction import ReactionModel
from rdopt.services.tridiagonal import solve_cyclic, solve_tridiagonal, solve_tridiagonal_lines

logger = structlog.get_logger()

BLOWUP_LIMIT = 1e3
BOUND_TOLERANCE = 1e-12

Forcing = Callable[[float, np.ndarray | tuple[np.ndarray, np.ndarray]], np.ndarray]


class LineOperator:
    """한 방향 2차 차분 Δ_h (Neumann 거울 노드 u_{-1}=u_1, 또는 주기)"""

    def __init__(self, grid: Grid1D):
        self.n = grid.n
        self.periodic = grid.boundary == "periodic"
        self.inv_dx2 = 1.0 / grid.dx ** 2

    def apply(self, u: np.ndarray, axis: int = 0) -> np.ndarray:
        if self.periodic:
            return (np.roll(u, 1, axis) - 2.0 * u + np.roll(u, -1, axis)) * self.inv_dx2
        v = np.moveaxis(u, axis, 0)
        out = np.empty_like(v)
        out[1:-1] = v[:-2] - 2.0 * v[1:-1] + v[2:]
        out[0] = 2.0 * (v[1] - v[0])
        out[-1] = 2.0 * (v[-2] - v[-1])
        return np.moveaxis(out * self.inv_dx2, 0, axis)

    def solve(self, coef: float, potential: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        """(I - coef*Δ_h - diag(potential)) x = rhs 를 axis 0 방향으로 푼다."""
        r = coef * self.inv_dx2
        diag = 1.0 + 2.0 * r - potential
        lower = np.full_like(rhs, -r)
        upper = np.full_like(rhs, -r)
        if not self.periodic:
            upper[0] = -2.0 * r
            lower[-1] = -2.0 * r

        if rhs.ndim == 2:
            if self.periodic:
                raise ConfigurationError("periodic line sweeps are only available in 1D")
            return solve_tridiagonal_lines(lower, diag, upper, rhs)
        if self.periodic:
            return solve_cyclic(lower, diag, upper, rhs)
        return solve_tridiagonal(lower, diag, upper, rhs)


class CrankNicolson1D:

    def __init__(self, grid: Grid1D):
        self.grid = grid
        self.op = LineOperator(grid)

    def laplacian(self, u: np.ndarray) -> np.ndarray:
        return self.op.apply(u)

    def step(
        self,
        u: np.ndarray,
        reaction: np.ndarray,
        jacobian: np.ndarray,
        dt: float,
        source: np.ndarray | None = None
    ) -> np.ndarray:
        # (I - dt/2 Δ - dt/2 J) u^{n+1} = (I + dt/2 Δ) u^n + dt (F - J u^n / 2)
        rhs = u + 0.5 * dt * self.op.apply(u) + dt * reaction - 0.5 * dt * jacobian * u
        if source is not None:
            rhs = rhs + dt * source
        return self.op.solve(0.5 * dt, 0.5 * dt * jacobian, rhs)


class PeacemanRachford2D:

    def __init__(self, grid: Grid2D):
        self.grid = grid
        self.op_x = LineOperator(grid.x_grid)
        self.op_y = LineOperator(grid.y_grid)

    def laplacian(self, u: np.ndarray) -> np.ndarray:
        return self.op_x.apply(u, axis=1) + self.op_y.apply(u, axis=0)

    def step(
        self,
        u: np.ndarray,
        reaction: np.ndarray,
        jacobian: np.ndarray,
        dt: float,
        source: np.ndarray | None = None
    ) -> np.ndarray:
        # 선형화 g(u) ≈ J u + r, J 를 두 방향에 절반씩 나눈다
        r = reaction - jacobian * u
        if source is not None:
            r = r + source
        quarter_j = 0.25 * dt * jacobian

        # x 방향 암시적 반스텝
        rhs = u + 0.5 * dt * self.op_y.apply(u, axis=0) + quarter_j * u + 0.5 * dt * r
        half = self.op_x.solve(0.5 * dt, quarter_j.T, rhs.T).T

        # y 방향 암시적 반스텝
        rhs = half + 0.5 * dt * self.op_x.apply(half, axis=1) + quarter_j * half + 0.5 * dt * r
        return self.op_y.solve(0.5 * dt, quarter_j, rhs)


def make_stepper(grid: Grid) -> CrankNicolson1D | PeacemanRachford2D:
    if isinstance(grid, Grid2D):
        return PeacemanRachford2D(grid)
    return CrankNicolson1D(grid)


def mass(field: ScalarField) -> float:
    return float(np.sum(field.grid.weights() * field.values))


def inner(grid: Grid, a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sum(grid.weights() * a * b))


def objective(traj: Trajectory) -> float:
    return mass(traj.final)


def check_stability(grid: Grid, tc: TimeConfig, model: ReactionModel) -> None:
    dt = tc.max_step()
    ratio = dt / grid.min_spacing ** 2
    if ratio > tc.max_cfl:
        raise ConfigurationError(
            f"dt/dx^2 = {ratio:.4g} exceeds the stability envelope max_cfl = {tc.max_cfl:.4g}"
        )
    stiffness = dt * model.lipschitz()
    if stiffness > 1.0:
        raise ConfigurationError(
            f"dt * sup|f'| = {stiffness:.4g} exceeds 1 for the linearly implicit reaction"
        )


def check_memory(grid: Grid, tc: TimeConfig, copies: int = 1) -> None:
    estimated = (tc.n_steps + 1) * int(np.prod(grid.shape)) * 8 * copies
    cap = get_settings().memory_cap_bytes
    if estimated > cap:
        raise MemoryBudgetError(
            f"trajectory storage needs {estimated / 1024 ** 3:.2f} GiB, cap is {cap / 1024 ** 3:.2f} GiB"
        )


def check_admissible_values(field: ScalarField) -> None:
    lo = float(np.min(field.values))
    hi = float(np.max(field.values))
    if lo < -BOUND_TOLERANCE or hi > 1.0 + BOUND_TOLERANCE:
        raise ConstraintError(f"initial values must lie in [0, 1], got [{lo:.6g}, {hi:.6g}]")


def guard_finite(u: np.ndarray, step: int, time: float) -> None:
    if not np.all(np.isfinite(u)):
        raise BlowUpError("non-finite value produced", step=step, time=time)
    peak = float(np.max(np.abs(u)))
    if peak > BLOWUP_LIMIT:
        raise BlowUpError(f"|u| = {peak:.4g} exceeds {BLOWUP_LIMIT:g}", step=step, time=time)


def _march(
    u0: ScalarField,
    model: ReactionModel,
    tc: TimeConfig,
    forcing: Forcing | None
) -> Trajectory:
    grid = u0.grid
    check_stability(grid, tc, model)
    check_memory(grid, tc)

    stepper = make_stepper(grid)
    times = tc.levels()
    nodes = grid.nodes() if forcing is not None else None
    values = np.empty((len(times), *grid.shape))
    values[0] = u0.values
    u = u0.values.copy()

    for k in range(len(times) - 1):
        dt = times[k + 1] - times[k]
        source = None
        if forcing is not None:
            source = 0.5 * (forcing(times[k], nodes) + forcing(times[k + 1], nodes))
        u = stepper.step(u, model.f(u), model.df(u), dt, source)
        guard_finite(u, k + 1, times[k + 1])
        values[k + 1] = u

    traj = Trajectory(grid=grid, times=times, values=values, model=model)

    if model.has_unit_equilibria():
        eps_mp = 10.0 * tc.max_step()
        if traj.min_value < -eps_mp or traj.max_value > 1.0 + eps_mp:
            logger.warning(
                "maximum_principle_excursion",
                min_value=traj.min_value,
                max_value=traj.max_value,
                tolerance=eps_mp
            )

    logger.debug(
        "forward_solve_completed",
        ndim=grid.ndim,
        steps=len(times) - 1,
        objective=objective(traj)
    )
    return traj


def forward_solve(
    u0: ScalarField,
    model: ReactionModel,
    tc: TimeConfig,
    forcing: Forcing | None = None,
    check_bounds: bool = True
) -> Trajectory:
    """1D 순방향 풀이 (Neumann 또는 주기 격자)"""
    if not isinstance(u0.grid, Grid1D):
        raise ConfigurationError("forward_solve requires a 1D grid")
    if check_bounds:
        check_admissible_values(u0)
    return _march(u0, model, tc, forcing)


def forward_solve_2d(
    u0: ScalarField,
    model: ReactionModel,
    tc: TimeConfig,
    forcing: Forcing | None = None,
    check_bounds: bool = True
) -> Trajectory:
    """2D 순방향 풀이 (ADI)"""
    if not isinstance(u0.grid, Grid2D):
        raise ConfigurationError("forward_solve_2d requires a 2D grid")
    if check_bounds:
        check_admissible_values(u0)
    return _march(u0, model, tc, forcing)


def solve(u0: ScalarField, model: ReactionModel, tc: TimeConfig) -> Trajectory:
    if isinstance(u0.grid, Grid2D):
        return forward_solve_2d(u0, model, tc)
    return forward_solve(u0, model, tc)


def evaluate(u0: ScalarField, model: ReactionModel, tc: TimeConfig) -> float:
    return objective(solve(u0, model, tc))
