"""주기 대칭 감소 재배열과 볼록 f 에 대한 블록 최적성 통계 검사"""

from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
import math
import numpy as np
import structlog
from rdopt.config import get_settings
from rdopt.errors import BlowUpError, ConfigurationError, NumericalError
from rdopt.models.grid import Grid1D, ScalarField, TimeConfig, TorusField
from rdopt.models.reaction import ReactionModel
from rdopt.models.rearrange import (
    BlockCheckReport,
    BlockCheckRow,
    ComparisonReport,
    ComparisonRow,
    DistributionFunction,
    ExtremePointReport,
    ExtremePointRow,
)
from rdopt.services import pde_core
from rdopt.services.initial_data import (
    level_set_fill,
    random_bang_bang,
    random_smooth,
    rasterize_interval,
)

logger = structlog.get_logger()

MARGIN_TOLERANCE = 1e-6
DEFAULT_NODES = 201


def distribution_function(field: ScalarField) -> DistributionFunction:
    values = field.values.ravel()
    w = field.grid.weights().ravel()
    levels, inverse = np.unique(values, return_inverse=True)
    per_level = np.bincount(inverse, weights=w, minlength=levels.size)
    # 위에서부터 누적: |{u >= level}|
    measures = np.cumsum(per_level[::-1])[::-1]
    return DistributionFunction(levels=levels, measures=measures)


def symmetrize_extend(field: ScalarField) -> TorusField:
    """(0, L) 위의 값을 0 에 대해 짝 반사한 뒤 [-L, L) 로 주기 연장"""
    grid = field.grid
    if not isinstance(grid, Grid1D) or grid.boundary != "neumann":
        raise ConfigurationError("symmetrize_extend expects a 1D Neumann field")
    if abs(grid.xmin) > 1e-12:
        raise ConfigurationError("symmetrize_extend expects a field on (0, L)")

    n = grid.n
    torus = Grid1D(xmin=-grid.xmax, xmax=grid.xmax, n=2 * (n - 1), boundary="periodic")
    j = np.arange(torus.n)
    return TorusField(grid=torus, values=field.values[np.abs(j - (n - 1))])


def _outward_offsets(count: int) -> np.ndarray:
    # 0, -1, +1, -2, +2, ... (동률은 음의 방향 먼저)
    k = np.arange(1, count)
    steps = (k + 1) // 2
    signs = np.where(k % 2 == 1, -1, 1)
    return np.concatenate([[0], signs * steps])


def periodic_rearrangement(tf: TorusField) -> TorusField:
    """값을 내림차순으로 정렬해 0 에서부터 바깥으로 번갈아 배치"""
    n = tf.values.size
    ordered = np.sort(tf.values)[::-1]
    positions = (tf.center_index() + _outward_offsets(n)) % n
    out = np.empty(n)
    out[positions] = ordered
    return TorusField(grid=tf.grid, values=out)


def centered_mass(tf: TorusField, r: float) -> float:
    x = tf.grid.nodes()
    mask = np.abs(x) <= r + 1e-12
    return float(np.sum(tf.grid.weights()[mask] * tf.values[mask]))


def _classify(model: ReactionModel) -> str:
    if abs(float(model.f(0.0))) > 1e-14:
        raise ConfigurationError("block check requires f(0) = 0")
    convex = model.is_convex_on()
    concave = model.is_concave_on()
    if convex and concave:
        return "linear"
    if convex:
        return "convex"
    if concave:
        return "concave"
    raise ConfigurationError(f"{model.kind} nonlinearity is neither convex nor concave on [0, 1]")


def _evaluate_all(profiles: list[ScalarField], model: ReactionModel, tc: TimeConfig) -> list[float]:
    def run(u0: ScalarField) -> float:
        try:
            return pde_core.evaluate(u0, model, tc)
        except BlowUpError as e:
            raise NumericalError(f"{e}; reduce T for this nonlinearity") from e

    with ThreadPoolExecutor(max_workers=get_settings().rdseed_threads) as pool:
        return list(pool.map(run, profiles))


def convex_block_check(
    model: ReactionModel,
    m: float,
    tc: TimeConfig,
    trials: int,
    seed: int,
    grid: Grid1D | None = None
) -> BlockCheckReport:
    """
    Ω = (0, π) 에서 블록 1_(0,m) 과 무작위 허용 초기값을 비교한다.

    볼록 f 이면 블록이 최대 (margin >= -tol), 오목 f 이면 최소 (margin <= tol).
    """
    grid = grid or Grid1D(xmin=0.0, xmax=math.pi, n=DEFAULT_NODES)
    regime = _classify(model)
    if not 0.0 < m < grid.measure:
        raise ConfigurationError(f"mass {m} must lie in (0, {grid.measure})")

    rng = np.random.default_rng(seed)
    profiles = [rasterize_interval(grid, grid.xmax - m, grid.xmax)]
    descriptions = ["reflected_block"]
    for trial in range(1, trials):
        if trial % 2:
            profiles.append(random_bang_bang(grid, m, rng))
            descriptions.append("bang_bang")
        else:
            profiles.append(random_smooth(grid, m, rng))
            descriptions.append("smooth")

    block_value, *values = _evaluate_all([rasterize_interval(grid, 0.0, m), *profiles], model, tc)

    rows = [
        BlockCheckRow(
            trial=trial,
            description=description,
            J_block=block_value,
            J_candidate=value,
            margin=block_value - value
        )
        for trial, (description, value) in enumerate(zip(descriptions, values))
    ]
    margins = np.array([row.margin for row in rows])
    min_margin = float(margins.min()) if rows else 0.0
    max_margin = float(margins.max()) if rows else 0.0

    if regime == "convex":
        passed = min_margin >= -MARGIN_TOLERANCE
    elif regime == "concave":
        passed = max_margin <= MARGIN_TOLERANCE
    else:
        passed = max(abs(min_margin), abs(max_margin)) <= MARGIN_TOLERANCE

    logger.info(
        "convex_block_check_completed",
        regime=regime,
        trials=len(rows),
        min_margin=min_margin,
        max_margin=max_margin,
        passed=passed
    )
    return BlockCheckReport(
        regime=regime,
        rows=rows,
        min_margin=min_margin,
        max_margin=max_margin,
        tolerance=MARGIN_TOLERANCE,
        passed=passed
    )


def extreme_point_check(
    model: ReactionModel,
    m: float,
    tc: TimeConfig,
    trials: int,
    seed: int,
    grid: Grid1D | None = None
) -> ExtremePointReport:
    """매끄러운 프로파일과 같은 질량의 bang-bang 사영 (상위 레벨 집합) 비교"""
    grid = grid or Grid1D(xmin=0.0, xmax=math.pi, n=DEFAULT_NODES)
    if _classify(model) == "concave":
        raise ConfigurationError("extreme point check applies to convex nonlinearities")

    rng = np.random.default_rng(seed)
    smooth = [random_smooth(grid, m, rng) for _ in range(trials)]
    projected = [u.with_values(level_set_fill(u.values, grid.weights(), m)) for u in smooth]
    values = _evaluate_all([*projected, *smooth], model, tc)

    rows = [
        ExtremePointRow(
            trial=i,
            J_bang_bang=values[i],
            J_profile=values[trials + i],
            margin=values[i] - values[trials + i]
        )
        for i in range(trials)
    ]
    min_margin = min((row.margin for row in rows), default=0.0)
    return ExtremePointReport(
        rows=rows,
        min_margin=min_margin,
        tolerance=MARGIN_TOLERANCE,
        passed=min_margin >= -MARGIN_TOLERANCE
    )


def parabolic_comparison_check(
    model: ReactionModel,
    u0: ScalarField,
    tc: TimeConfig,
    r_samples: Sequence[float],
    t_samples: int = 5
) -> ComparisonReport:
    """
    토러스 위에서 재배열된 초기값의 해 v 와 해의 재배열 u* 를 비교한다.

    모든 (t, r) 에서 ∫_{-r}^{r} v(t) >= ∫_{-r}^{r} u*(t) 이어야 한다.
    """
    extended = symmetrize_extend(u0)
    rearranged = periodic_rearrangement(extended)
    try:
        u_traj = pde_core.forward_solve(extended, model, tc)
        v_traj = pde_core.forward_solve(rearranged, model, tc)
    except BlowUpError as e:
        raise NumericalError(f"{e}; reduce T for this nonlinearity") from e

    indices = np.unique(np.round(np.linspace(0, u_traj.n_levels - 1, t_samples)).astype(int))
    rows = []
    for idx in indices:
        u_star = periodic_rearrangement(TorusField(grid=extended.grid, values=u_traj.values[idx]))
        v_t = TorusField(grid=extended.grid, values=v_traj.values[idx])
        for r in r_samples:
            lhs = centered_mass(v_t, r)
            rhs = centered_mass(u_star, r)
            rows.append(ComparisonRow(t=float(u_traj.times[idx]), r=float(r), lhs=lhs, rhs=rhs, margin=lhs - rhs))

    worst = min((row.margin for row in rows), default=0.0)
    logger.info("parabolic_comparison_completed", samples=len(rows), worst_margin=worst)
    return ComparisonReport(
        rows=rows,
        worst_margin=worst,
        tolerance=MARGIN_TOLERANCE,
        passed=worst >= -MARGIN_TOLERANCE
    )
