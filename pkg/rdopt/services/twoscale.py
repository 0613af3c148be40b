"""2-스케일 전개의 수치 검증

h_k ≈ θ(x)cos(kx)e^{-k²t} - 2kt e^{-k²t} θ'(x) sin(kx), 나머지 R_k = O(1/k²).
"""

from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
import math
import numpy as np
import structlog
from scipy.integrate import quad, trapezoid
from rdopt.config import get_settings
from rdopt.errors import ConfigurationError
from rdopt.models.grid import Grid1D, ScalarField, TimeConfig, Trajectory
from rdopt.models.reaction import ReactionModel
from rdopt.models.sensitivity import AdjointTrajectory
from rdopt.models.twoscale import CutoffProfile, RemainderSweep
from rdopt.services import adjoint_sens, pde_core

logger = structlog.get_logger()

MIN_SUPPORT_NODES = 32
FINE_STEPS_PER_SCALE = 40
FINE_SCALES = 5.0


def _require_1d(grid) -> Grid1D:
    if not isinstance(grid, Grid1D) or grid.boundary != "neumann":
        raise ConfigurationError("two-scale checks run on a 1D Neumann grid")
    return grid


def make_cutoff(a: float, b: float, grid: Grid1D) -> CutoffProfile:
    """표준 지수 범프 exp(1 - 1/(1-s²)) 를 (a, b) 로 옮긴 것"""
    grid = _require_1d(grid)
    if not grid.xmin < a < b < grid.xmax:
        raise ConfigurationError(f"cutoff support ({a}, {b}) must lie inside ({grid.xmin}, {grid.xmax})")

    x = grid.nodes()
    inside = (x > a) & (x < b)
    if np.count_nonzero(inside) < MIN_SUPPORT_NODES:
        raise ConfigurationError(
            f"cutoff support has {np.count_nonzero(inside)} nodes, need at least {MIN_SUPPORT_NODES}"
        )

    s = (2.0 * x[inside] - a - b) / (b - a)
    gap = 1.0 - s * s
    theta = np.zeros(grid.n)
    dtheta = np.zeros(grid.n)
    theta[inside] = np.exp(1.0 - 1.0 / gap)
    dtheta[inside] = theta[inside] * (-2.0 * s / gap ** 2) * (2.0 / (b - a))

    return CutoffProfile(
        a=a,
        b=b,
        field=ScalarField(grid=grid, values=theta),
        dfield=ScalarField(grid=grid, values=dtheta)
    )


def leading_terms(theta: CutoffProfile, k: int, t: float) -> ScalarField:
    x = theta.grid.nodes()
    decay = math.exp(-k * k * t)
    values = (
        theta.field.values * np.cos(k * x) * decay
        - 2.0 * k * t * decay * theta.dfield.values * np.sin(k * x)
    )
    return theta.field.with_values(values)


def sweep_time_config(
    T: float,
    k_list: Sequence[int],
    grid: Grid1D,
    max_cfl: float = 100.0
) -> TimeConfig:
    """t = O(1/k²) 과도 구간을 세밀하게, 나머지는 CFL 한계 안의 균일 스텝"""
    k_min, k_max = min(k_list), max(k_list)
    fine_until = FINE_SCALES / k_min ** 2
    if not T > fine_until:
        raise ConfigurationError(f"T = {T} must exceed the transient window {fine_until:.4g}")

    cfl_step = max_cfl * grid.min_spacing ** 2
    fine_dt = min(1.0 / (FINE_STEPS_PER_SCALE * k_max ** 2), cfl_step)
    fine_steps = math.ceil(fine_until / fine_dt)
    nt = math.ceil((T - fine_until) / cfl_step)
    return TimeConfig(T=T, nt=nt, fine_until=fine_until, fine_steps=fine_steps, max_cfl=max_cfl)


def _check_resolution(grid: Grid1D, k_max: int, tc: TimeConfig) -> None:
    if grid.dx > math.pi / (16 * k_max) * (1.0 + 1e-12):
        raise ConfigurationError(
            f"dx = {grid.dx:.4g} does not resolve k = {k_max} (need dx <= π/(16k))"
        )
    if tc.first_step() > 1.0 / (10 * k_max ** 2) * (1.0 + 1e-12):
        raise ConfigurationError(
            f"first time step {tc.first_step():.4g} does not resolve e^(-k²t) for k = {k_max}"
        )


def _remainder_norms(
    traj: Trajectory,
    model: ReactionModel,
    theta: CutoffProfile,
    k: int
) -> np.ndarray:
    x = theta.grid.nodes()
    h0 = theta.field.with_values(theta.field.values * np.cos(k * x))
    h = adjoint_sens.linearized_solve(traj, model, h0)
    w = theta.grid.weights()
    norms = np.empty(traj.n_levels)
    for i, t in enumerate(traj.times):
        remainder = h.values[i] - leading_terms(theta, k, t).values
        norms[i] = math.sqrt(float(np.sum(w * remainder ** 2)))
    return norms


def cutoff_alpha(theta: CutoffProfile, k: int) -> float:
    w = theta.grid.weights()
    x = theta.grid.nodes()
    return -float(np.sum(w * theta.field.values * np.cos(k * x))) / float(np.sum(w * theta.field.values))


def remainder_sweep(
    u_background: ScalarField,
    model: ReactionModel,
    theta: CutoffProfile,
    k_list: Sequence[int],
    tc: TimeConfig
) -> RemainderSweep:
    grid = _require_1d(u_background.grid)
    ks = np.asarray(sorted(k_list), dtype=int)
    _check_resolution(grid, int(ks[-1]), tc)

    traj = pde_core.solve(u_background, model, tc)
    with ThreadPoolExecutor(max_workers=get_settings().rdseed_threads) as pool:
        all_norms = list(pool.map(lambda k: _remainder_norms(traj, model, theta, int(k)), ks))

    sup_norms = np.array([float(np.max(n)) for n in all_norms])
    integrated = np.array([
        float(trapezoid(n ** 2, traj.times)) * float(k) ** 4 for n, k in zip(all_norms, ks)
    ])
    log_k = np.log(ks.astype(float))
    log_sup = np.log(sup_norms)
    slope, intercept = np.polyfit(log_k, log_sup, 1)
    fitted = slope * log_k + intercept
    ss_res = float(np.sum((log_sup - fitted) ** 2))
    ss_tot = float(np.sum((log_sup - log_sup.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    sweep = RemainderSweep(
        k_list=ks,
        sup_norms=sup_norms,
        slope=float(slope),
        intercept=float(intercept),
        r2=r2,
        alpha=np.array([cutoff_alpha(theta, int(k)) for k in ks]),
        bound_constants=sup_norms * ks.astype(float) ** 2,
        integrated=integrated,
        times=np.asarray(traj.times, dtype=float),
        norms=np.vstack(all_norms)
    )
    logger.info(
        "remainder_sweep_completed",
        k_list=ks.tolist(),
        slope=sweep.slope,
        r2=sweep.r2,
        uniformity=sweep.uniformity,
        time_uniformity=sweep.time_uniformity.tolist()
    )
    return sweep


def laplace_check(m: int, k: int, T: float) -> float:
    """∫_0^T t^{m-1} e^{-k²t} dt · k^{2m} / (m-1)!  (→ 1)"""
    if m < 1 or k < 1:
        raise ConfigurationError("laplace_check requires m >= 1 and k >= 1")
    # s = k²t 로 치환하면 적분 구간이 [0, k²T]
    upper = k * k * T
    breaks = [p for p in (float(m - 1), 10.0 * m) if 0.0 < p < upper]
    value, _ = quad(
        lambda s: s ** (m - 1) * math.exp(-s),
        0.0,
        upper,
        points=breaks or None,
        limit=200,
        epsabs=1e-14,
        epsrel=1e-12
    )
    return value / math.factorial(m - 1)


def climb_ratio(
    traj: Trajectory,
    adj: AdjointTrajectory,
    theta: CutoffProfile,
    k: int
) -> float:
    """k² ∬f''(u) p h_k² / ∫f''(u0) p(0) θ²  (진단용, 약 1/2 로 수렴)"""
    x = theta.grid.nodes()
    h0 = theta.field.with_values(theta.field.values * np.cos(k * x))
    numerator = k * k * adjoint_sens.hessian_quadratic_form(traj, adj, h0)
    w = theta.grid.weights()
    denominator = float(np.sum(w * traj.model.d2f(traj.values[0]) * adj.values[0] * theta.field.values ** 2))
    return numerator / denominator
