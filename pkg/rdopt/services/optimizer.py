"""고정점/기울기 알고리즘 (bathtub 임계값 + 특이호 해소)

u0^{n+1} = u0^n + τ (ũ - u0^n), ũ 는 p0 의 레벨 집합으로 만든 후보.
특이호 {p0 = c} 에서는 f'(v) = -p_t(0)/c 의 근 중 f'' <= 0 인 근을 택한다.
"""

import time
import numpy as np
import structlog
from scipy.optimize import brentq
from rdopt.errors import ConstraintError
from rdopt.models.grid import ScalarField, TimeConfig, Trajectory
from rdopt.models.optimizer import (
    ArcFill,
    BathtubSplit,
    IterationRecord,
    OptimizeResult,
    OptimizerOptions,
    OptimizerState,
    Prop1Report,
    RootRule,
)
from rdopt.models.reaction import ReactionModel
from rdopt.services import adjoint_sens, pde_core
from rdopt.services.initial_data import check_mass
from rdopt.services.nonlinearity import solve_fprime

logger = structlog.get_logger()

MASS_TOLERANCE = 1e-10
FIXED_POINT_TOLERANCE = 1e-12


def bathtub_split(p0: ScalarField, m: float, eps_flat: float) -> BathtubSplit:
    check_mass(p0.grid, m)
    p = p0.values.ravel()
    w = p0.grid.weights().ravel()

    # c: mass({p0 > c}) <= m 를 만족하는 가장 큰 레벨
    order = np.argsort(-p, kind="stable")
    cum = np.cumsum(w[order])
    k = min(int(np.searchsorted(cum, m, side="left")), p.size - 1)
    c = float(p[order[k]])

    upper = p > c + eps_flat
    lower = p < c - eps_flat
    band = ~(upper | lower)

    if np.count_nonzero(band) <= 1:
        # 평탄 구역 없음: 경계 셀 하나를 비율로 채워 질량을 정확히 맞춘다
        cell = int(order[k])
        fill = (m - float(np.sum(w[upper]))) / w[cell]
        return BathtubSplit(
            c=c,
            upper_cells=np.flatnonzero(upper),
            lower_cells=np.flatnonzero(lower),
            flat_cells=np.array([], dtype=int),
            eps_flat=eps_flat,
            threshold_cell=cell,
            threshold_fill=min(max(fill, 0.0), 1.0)
        )

    return BathtubSplit(
        c=c,
        upper_cells=np.flatnonzero(upper),
        lower_cells=np.flatnonzero(lower),
        flat_cells=np.flatnonzero(band),
        eps_flat=eps_flat
    )


def _endpoint_fallback(model: ReactionModel, target: float) -> float:
    d0 = abs(float(model.df(0.0)) - target)
    d1 = abs(float(model.df(1.0)) - target)
    return 0.0 if d0 <= d1 else 1.0


def _select_root(roots, rule: RootRule, previous: float | None):
    concave = [r for r in roots if r.concavity <= 0]
    convex = [r for r in roots if r.concavity > 0]
    if rule == "convex":
        pool = convex or concave
    else:
        pool = concave
    if not pool:
        return None
    if len(pool) == 1 or previous is None:
        return pool[0]
    # f'' <= 0 근이 여럿이면 이전 반복값에 가장 가까운 근
    return min(pool, key=lambda r: abs(r.value - previous))


def singular_arc_fill(
    model: ReactionModel,
    split: BathtubSplit,
    p0: ScalarField,
    pt0: ScalarField,
    previous: ScalarField | None = None,
    rule: RootRule = "concave"
) -> ArcFill:
    """평탄 셀마다 f'(v) = -pt0/c 를 풀고 근을 하나 고른다."""
    cells = split.flat_cells
    values = np.zeros(cells.size)
    fallback = np.zeros(cells.size, dtype=bool)
    concavity = np.zeros(cells.size, dtype=int)
    pt = pt0.values.ravel()
    prev = previous.values.ravel() if previous is not None else None

    for idx, cell in enumerate(cells):
        target = -pt[cell] / split.c
        roots = solve_fprime(model, target, 0.0, 1.0)
        chosen = _select_root(roots, rule, None if prev is None else float(prev[cell]))
        if chosen is None:
            values[idx] = _endpoint_fallback(model, target)
            fallback[idx] = True
            concavity[idx] = int(np.sign(model.d2f(values[idx])))
        else:
            values[idx] = chosen.value
            concavity[idx] = chosen.concavity

    return ArcFill(values=values, fallback=fallback, concavity=concavity)


def _restore_flat_mass(fill: np.ndarray, w_flat: np.ndarray, deficit: float) -> np.ndarray:
    """평탄 셀 값을 배율 조정해 질량 deficit 을 맞추고, 부족하면 임계값을 비율로 옮긴다."""
    positive = fill > 0.0
    capacity = float(np.sum(w_flat[positive]))
    if positive.any() and capacity >= deficit:
        def excess(s: float) -> float:
            return float(np.sum(w_flat * np.minimum(s * fill, 1.0))) - deficit

        s_max = 1.0 / float(np.min(fill[positive]))
        scale = brentq(excess, 0.0, s_max, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
        return np.minimum(scale * fill, 1.0)

    out = np.where(positive, 1.0, 0.0)
    rest = deficit - capacity
    free = ~positive
    if free.any():
        out[free] = min(rest / float(np.sum(w_flat[free])), 1.0)
    return out


def _polish_mass(values: np.ndarray, w: np.ndarray, m: float) -> np.ndarray:
    interior = (values > 0.0) & (values < 1.0)
    if not interior.any():
        return values
    residual = m - float(np.sum(w * values))
    out = values.copy()
    out[interior] = np.clip(out[interior] + residual / float(np.sum(w[interior])), 0.0, 1.0)
    return out


def build_candidate(
    state: OptimizerState,
    model: ReactionModel,
    m: float,
    rule: RootRule = "concave"
) -> tuple[np.ndarray, int]:
    """ũ: upper 에 1, lower 에 0, 특이호에 근, 질량을 정확히 m 으로"""
    split = state.split
    grid = state.iterate.grid
    w = grid.weights().ravel()
    cand = np.zeros(w.size)
    cand[split.upper_cells] = 1.0
    fallback_count = 0

    if split.threshold_cell is not None:
        cand[split.threshold_cell] = split.threshold_fill
    elif split.flat_cells.size:
        fill = singular_arc_fill(model, split, state.adjoint0, state.pt0, state.iterate, rule)
        fallback_count = fill.fallback_count
        deficit = m - float(np.sum(w[split.upper_cells]))
        cand[split.flat_cells] = _restore_flat_mass(fill.values, w[split.flat_cells], deficit)

    cand = _polish_mass(cand, w, m)
    return cand.reshape(grid.shape), fallback_count


def _split_for(p0: ScalarField, m: float, options: OptimizerOptions) -> BathtubSplit:
    spread = float(np.max(p0.values) - np.min(p0.values))
    return bathtub_split(p0, m, options.eps_flat * spread)


def _state_from(
    iterate: ScalarField,
    traj: Trajectory,
    model: ReactionModel,
    m: float,
    options: OptimizerOptions,
    **extra
) -> OptimizerState:
    adj = adjoint_sens.adjoint_solve(traj, model)
    p0 = adjoint_sens.gradient(adj)
    return OptimizerState(
        iterate=iterate,
        objective=pde_core.objective(traj),
        adjoint0=p0,
        pt0=adjoint_sens.estimate_pt0(adj),
        split=_split_for(p0, m, options),
        **extra
    )


def check_admissible(u0: ScalarField, m: float) -> None:
    pde_core.check_admissible_values(u0)
    current = pde_core.mass(u0)
    if abs(current - m) > MASS_TOLERANCE * max(m, 1.0):
        raise ConstraintError(f"initial mass {current:.12g} differs from m = {m:.12g}")


def initial_state(
    u0: ScalarField,
    model: ReactionModel,
    tc: TimeConfig,
    m: float,
    options: OptimizerOptions | None = None
) -> OptimizerState:
    options = options or OptimizerOptions()
    check_admissible(u0, m)
    traj = pde_core.solve(u0, model, tc)
    return _state_from(u0, traj, model, m, options, forward_solves=1)


def _line_search(
    state: OptimizerState,
    candidate: np.ndarray,
    model: ReactionModel,
    tc: TimeConfig,
    options: OptimizerOptions
) -> tuple[float | None, ScalarField | None, Trajectory | None, int]:
    u = state.iterate.values
    solves = 0
    for j in range(options.max_halvings + 1):
        tau = 0.5 ** j
        trial = state.iterate.with_values(np.clip(u + tau * (candidate - u), 0.0, 1.0))
        traj = pde_core.solve(trial, model, tc)
        solves += 1
        if pde_core.objective(traj) > state.objective:
            return tau, trial, traj, solves
    return None, None, None, solves


def fixed_point_step(
    state: OptimizerState,
    model: ReactionModel,
    tc: TimeConfig,
    options: OptimizerOptions | None = None
) -> OptimizerState:
    options = options or OptimizerOptions()
    m = pde_core.mass(state.iterate)

    rules: list[RootRule] = ["concave", "convex"] if options.root_rule == "best" else [options.root_rule]
    if state.split.flat_cells.size == 0:
        rules = rules[:1]

    candidates = [build_candidate(state, model, m, rule) for rule in rules]
    moves = [float(np.max(np.abs(c - state.iterate.values))) for c, _ in candidates]
    if all(move <= FIXED_POINT_TOLERANCE for move in moves):
        return state.model_copy(update={
            "iteration": state.iteration + 1,
            "damping": 0.0,
            "converged": True,
            "fallback_cells": 0
        })

    best = None
    solves = 0
    for (cand, fallback_count), move in zip(candidates, moves):
        if move <= FIXED_POINT_TOLERANCE:
            continue
        tau, trial, traj, used = _line_search(state, cand, model, tc, options)
        solves += used
        if tau is None:
            continue
        value = pde_core.objective(traj)
        if best is None or value > best[0]:
            best = (value, tau, trial, traj, fallback_count)

    if best is None:
        logger.info("optimizer_stalled", iteration=state.iteration + 1, objective=state.objective)
        return state.model_copy(update={
            "iteration": state.iteration + 1,
            "damping": 0.0,
            "converged": True,
            "stalled": True,
            "fallback_cells": 0,
            "forward_solves": state.forward_solves + solves
        })

    _, tau, trial, traj, fallback_count = best
    return _state_from(
        trial,
        traj,
        model,
        m,
        options,
        iteration=state.iteration + 1,
        damping=tau,
        fallback_cells=fallback_count,
        forward_solves=state.forward_solves + solves
    )


def _record(state: OptimizerState, wall_ms: float) -> IterationRecord:
    return IterationRecord(
        iter=state.iteration,
        objective=state.objective,
        threshold_c=state.split.c,
        flat_cell_count=state.split.flat_count,
        tau=state.damping,
        wall_ms=wall_ms
    )


def optimize(
    u0_init: ScalarField,
    model: ReactionModel,
    tc: TimeConfig,
    m: float,
    opts: OptimizerOptions | None = None
) -> OptimizeResult:
    opts = opts or OptimizerOptions()
    started = time.perf_counter()
    tick = started

    def lap() -> float:
        nonlocal tick
        now = time.perf_counter()
        elapsed, tick = (now - tick) * 1e3, now
        return elapsed if opts.timings else 0.0

    state = initial_state(u0_init, model, tc, m, opts)
    initial_objective = state.objective
    trace = [_record(state, lap())]
    logger.info("optimizer_started", objective=initial_objective, root_rule=opts.root_rule)

    converged = False
    quiet_steps = 0
    fallback_total = 0
    for _ in range(opts.max_iter):
        previous = state.objective
        state = fixed_point_step(state, model, tc, opts)
        fallback_total += state.fallback_cells
        trace.append(_record(state, lap()))

        logger.info(
            "optimizer_iteration",
            iteration=state.iteration,
            objective=state.objective,
            tau=state.damping,
            flat_cells=state.split.flat_count
        )

        if state.converged:
            converged = True
            break
        rel_change = abs(state.objective - previous) / max(abs(previous), np.finfo(float).tiny)
        quiet_steps = quiet_steps + 1 if rel_change < opts.tol else 0
        if quiet_steps >= opts.patience:
            converged = True
            break

    arc_cells = state.split.flat_count
    wall_s = time.perf_counter() - started
    logger.info(
        "optimizer_finished",
        objective=state.objective,
        iterations=state.iteration,
        converged=converged,
        stalled=state.stalled,
        wall_s=round(wall_s, 3)
    )

    return OptimizeResult(
        method="fixed_point",
        final=state.iterate,
        objective=state.objective,
        initial_objective=initial_objective,
        trace=trace,
        converged=converged,
        stalled=state.stalled,
        iterations=state.iteration,
        forward_solves=state.forward_solves,
        fallback_cell_count=fallback_total,
        arc_cell_count=arc_cells,
        adjoint0=state.adjoint0,
        threshold_c=state.split.c,
        wall_s=wall_s if opts.timings else 0.0
    )


def prop1_certificate(
    result: OptimizeResult,
    model: ReactionModel,
    delta_arc: float = 1e-3,
    tolerance: float = 1e-6
) -> Prop1Report:
    """특이호 셀(δ < u0 < 1-δ) 에서 f''(u0) <= 0 인지 사후 검사"""
    u = result.final.values.ravel()
    arc = (u > delta_arc) & (u < 1.0 - delta_arc)
    count = int(np.count_nonzero(arc))

    if count == 0:
        return Prop1Report(
            status="empty singular arc",
            passed=True,
            max_fpp_on_arc=None,
            arc_cell_count=0,
            violating_fraction=0.0,
            fallback_cell_count=result.fallback_cell_count,
            delta_arc=delta_arc,
            tolerance=tolerance
        )

    curvature = model.d2f(u[arc])
    worst = float(np.max(curvature))
    violating = float(np.count_nonzero(curvature > tolerance)) / count
    passed = worst <= tolerance
    return Prop1Report(
        status="passed" if passed else "violated",
        passed=passed,
        max_fpp_on_arc=worst,
        arc_cell_count=count,
        violating_fraction=violating,
        fallback_cell_count=result.fallback_cell_count,
        delta_arc=delta_arc,
        tolerance=tolerance
    )
