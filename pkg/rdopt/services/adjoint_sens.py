"""수반 방정식, 1차/2차 미분, 선형화 방정식

연속 수반(optimize-then-discretize) 방식: 수반 방정식을 순방향 스킴과 같은
계열로 독립적으로 이산화하므로 이산 기울기와 O(dt) 차이가 난다.
"""

import numpy as np
import structlog
from scipy.integrate import trapezoid
from rdopt.models.grid import ScalarField, TimeConfig, Trajectory
from rdopt.models.reaction import ReactionModel
from rdopt.models.sensitivity import AdjointTrajectory, GradientCheckRow, GradientReport
from rdopt.services import pde_core

logger = structlog.get_logger()


def adjoint_solve(traj: Trajectory, model: ReactionModel) -> AdjointTrajectory:
    stepper = pde_core.make_stepper(traj.grid)
    times = traj.times
    values = np.empty_like(traj.values)
    p = np.ones(traj.grid.shape)
    values[-1] = p

    # t = T 에서 역방향으로. 전위 f'(u) 는 이미 알려진 시간 레벨 k+1 에서 평가
    for k in range(len(times) - 2, -1, -1):
        dt = times[k + 1] - times[k]
        potential = model.df(traj.values[k + 1])
        p = stepper.step(p, potential * p, potential, dt)
        pde_core.guard_finite(p, k, times[k])
        values[k] = p

    p0_min = float(np.min(values[0]))
    if p0_min <= 0.0:
        logger.warning(
            "maximum_principle_violation",
            min_p0=p0_min,
            hint="adjoint lost positivity, refine the mesh"
        )

    return AdjointTrajectory(grid=traj.grid, times=times, values=values, forward=traj)


def gradient(adj: AdjointTrajectory) -> ScalarField:
    return adj.initial


def directional_derivative(adj: AdjointTrajectory, h0: ScalarField) -> float:
    return pde_core.inner(adj.grid, adj.values[0], h0.values)


def project_zero_mean(h0: ScalarField) -> ScalarField:
    w = h0.grid.weights()
    return h0.with_values(h0.values - float(np.sum(w * h0.values)) / float(np.sum(w)))


def linearized_solve(traj: Trajectory, model: ReactionModel, h0: ScalarField) -> Trajectory:
    """h_t - Δh = f'(u) h, h(0) = h0 (고정된 전위, 순방향 스킴과 같은 계열)"""
    stepper = pde_core.make_stepper(traj.grid)
    times = traj.times
    values = np.empty_like(traj.values)
    h = h0.values.copy()
    values[0] = h

    for k in range(len(times) - 1):
        dt = times[k + 1] - times[k]
        potential = model.df(traj.values[k])
        h = stepper.step(h, potential * h, potential, dt)
        pde_core.guard_finite(h, k + 1, times[k + 1])
        values[k + 1] = h

    return Trajectory(grid=traj.grid, times=times, values=values, model=model)


def hessian_quadratic_form(
    traj: Trajectory,
    adj: AdjointTrajectory,
    h0: ScalarField
) -> float:
    """∬ f''(u) p h^2 dx dt (공간 사다리꼴 × 시간 사다리꼴)"""
    h = linearized_solve(traj, traj.model, h0)
    w = traj.grid.weights()
    axes = tuple(range(1, traj.values.ndim))
    density = np.sum(w * traj.model.d2f(traj.values) * adj.values * h.values ** 2, axis=axes)
    return float(trapezoid(density, traj.times))


def estimate_pt0(adj: AdjointTrajectory) -> ScalarField:
    """(p(dt, ·) - p(0, ·)) / dt, 단측 1차 차분"""
    if adj.n_levels < 2:
        raise ValueError("adjoint needs at least two time levels")
    dt = adj.times[1] - adj.times[0]
    return ScalarField(grid=adj.grid, values=(adj.values[1] - adj.values[0]) / dt)


def gradient_report(
    u0: ScalarField,
    model: ReactionModel,
    tc: TimeConfig,
    h0: ScalarField | None = None
) -> GradientReport:
    traj = pde_core.solve(u0, model, tc)
    adj = adjoint_solve(traj, model)
    if h0 is None:
        return GradientReport(gradient_field=gradient(adj))
    return GradientReport(
        gradient_field=gradient(adj),
        directional=directional_derivative(adj, h0),
        hessian_form=hessian_quadratic_form(traj, adj, h0)
    )


def _objective_unchecked(values: np.ndarray, u0: ScalarField, model: ReactionModel, tc: TimeConfig) -> float:
    # 섭동된 초기값은 [0, 1] 을 살짝 벗어날 수 있다
    field = u0.with_values(values)
    if field.grid.ndim == 2:
        traj = pde_core.forward_solve_2d(field, model, tc, check_bounds=False)
    else:
        traj = pde_core.forward_solve(field, model, tc, check_bounds=False)
    return pde_core.objective(traj)


def gradient_check(
    u0: ScalarField,
    model: ReactionModel,
    tc: TimeConfig,
    h0: ScalarField,
    epsilons: list[float]
) -> list[GradientCheckRow]:
    """중심 차분 방향미분과 수반 방향미분 비교"""
    traj = pde_core.solve(u0, model, tc)
    adj = adjoint_solve(traj, model)
    adjoint_value = directional_derivative(adj, h0)

    rows = []
    for eps in epsilons:
        j_plus = _objective_unchecked(u0.values + eps * h0.values, u0, model, tc)
        j_minus = _objective_unchecked(u0.values - eps * h0.values, u0, model, tc)
        fd_value = (j_plus - j_minus) / (2.0 * eps)
        rel_error = abs(fd_value - adjoint_value) / max(abs(fd_value), np.finfo(float).tiny)
        rows.append(GradientCheckRow(
            epsilon=eps,
            fd_value=fd_value,
            adjoint_value=adjoint_value,
            rel_error=rel_error
        ))

    logger.info(
        "gradient_check_completed",
        adjoint_value=adjoint_value,
        worst_rel_error=max(r.rel_error for r in rows)
    )
    return rows


def hessian_fd_check(
    u0: ScalarField,
    model: ReactionModel,
    tc: TimeConfig,
    h0: ScalarField,
    eps: float = 1e-3
) -> float:
    """(J(u0+εh) - 2J(u0) + J(u0-εh)) / ε^2"""
    j_plus = _objective_unchecked(u0.values + eps * h0.values, u0, model, tc)
    j_mid = _objective_unchecked(u0.values, u0, model, tc)
    j_minus = _objective_unchecked(u0.values - eps * h0.values, u0, model, tc)
    return (j_plus - 2.0 * j_mid + j_minus) / eps ** 2


def dt_refinement_ratio(
    u0: ScalarField,
    model: ReactionModel,
    tc: TimeConfig,
    h0: ScalarField,
    eps: float = 1e-4
) -> float:
    """dt 를 반으로 줄였을 때 기울기 상대오차의 비 (1차 정확도면 약 2)"""
    refined = tc.model_copy(update={"nt": 2 * tc.nt, "fine_steps": 2 * tc.fine_steps})
    coarse_err = gradient_check(u0, model, tc, h0, [eps])[0].rel_error
    fine_err = gradient_check(u0, model, refined, h0, [eps])[0].rel_error
    return coarse_err / max(fine_err, np.finfo(float).tiny)
