"""CLI 하위 명령 처리기. 모드마다 실행 디렉터리에 CSV, 필드 덤프, manifest 를 쓴다."""

from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
import json
from pathlib import Path
import numpy as np
import structlog
from scipy.special import gammainc
from rdopt import __version__
from rdopt.config import get_settings
from rdopt.errors import ConfigurationError, PersistenceError, RdOptError
from rdopt.models.experiment import ExperimentConfig
from rdopt.models.grid import Grid1D, ScalarField
from rdopt.models.optimizer import OptimizeResult
from rdopt.models.reaction import ReactionModel
from rdopt.services import adjoint_sens, pde_core
from rdopt.services.annealing import simulated_annealing
from rdopt.services.config_parser import config_hash, dump_config
from rdopt.services.field_io import dump_field, dump_trajectory, load_field, write_table
from rdopt.services.initial_data import (
    block,
    constant_profile,
    random_bang_bang,
    random_direction,
    rasterize_ball,
    rasterize_stripe,
)
from rdopt.services.optimizer import optimize, prop1_certificate
from rdopt.services.rearrange import convex_block_check, extreme_point_check, parabolic_comparison_check
from rdopt.services.twoscale import laplace_check, make_cutoff, remainder_sweep, sweep_time_config

logger = structlog.get_logger()

Handler = Callable[[ExperimentConfig, Path], list[Path]]

HESSIAN_DIRECTIONS = 5
EXTREME_POINT_TRIALS = 50
LAPLACE_ORDERS = (1, 2, 3)


def build_initial(cfg: ExperimentConfig) -> ScalarField:
    grid = cfg.grid()
    m = cfg.constraint.mass
    center = cfg.initial.center

    match cfg.initial.shape:
        case "block":
            return block(grid, m, center[0] if center else None)
        case "ball":
            return rasterize_ball(grid, m, tuple(center) if center else None)
        case "stripe":
            return rasterize_stripe(grid, m, center[0] if center else None)
        case "constant":
            return constant_profile(grid, m)
        case "file":
            field = load_field(cfg.initial.path)
            if field.grid != grid:
                raise ConfigurationError(f"grid of {cfg.initial.path} does not match [domain]")
            return field


def _require_seed(cfg: ExperimentConfig, mode: str) -> int:
    if cfg.optimizer.seed is None:
        raise ConfigurationError(f"mode {mode} is stochastic and needs [optimizer] seed")
    return cfg.optimizer.seed


def _pool() -> ThreadPoolExecutor:
    return ThreadPoolExecutor(max_workers=get_settings().rdseed_threads)


def _trace_rows(result: OptimizeResult) -> list[dict]:
    if result.method == "fixed_point":
        columns = ["iter", "objective", "threshold_c", "flat_cell_count", "tau", "wall_ms"]
    else:
        columns = ["iter", "objective", "temperature", "acceptance_rate", "wall_ms"]
    return [record.model_dump(include=set(columns)) for record in result.trace]


def _write_result(result: OptimizeResult, model: ReactionModel, out_dir: Path) -> list[Path]:
    paths = [write_table(out_dir / "trace.csv", _trace_rows(result))]

    dump_field(out_dir / "u0_final.dat", result.final)
    paths.append(out_dir / "u0_final.dat")
    if result.adjoint0 is not None:
        dump_field(out_dir / "p0_final.dat", result.adjoint0)
        paths.append(out_dir / "p0_final.dat")

    report = prop1_certificate(result, model)
    report_path = out_dir / "prop1_report.txt"
    _write_text(report_path, json.dumps(report.model_dump(), indent=2) + "\n")
    paths.append(report_path)
    return paths


def _summary_row(result: OptimizeResult) -> dict:
    return {
        "method": result.method,
        "initial_objective": result.initial_objective,
        "final_objective": result.objective,
        "iterations": result.iterations,
        "forward_solves": result.forward_solves,
        "converged": result.converged,
        "wall_s": result.wall_s
    }


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise PersistenceError(f"cannot write {path}: {e}") from e


def run_forward(cfg: ExperimentConfig, out_dir: Path) -> list[Path]:
    u0 = build_initial(cfg)
    traj = pde_core.solve(u0, cfg.reaction_model(), cfg.time_config())

    dump_field(out_dir / "u_final.dat", traj.final)
    paths = [out_dir / "u_final.dat"]
    if cfg.output.snapshot_stride:
        paths += dump_trajectory(out_dir / "snapshots", traj, cfg.output.snapshot_stride)

    paths.append(write_table(out_dir / "summary.csv", [{
        "initial_mass": pde_core.mass(u0),
        "objective": pde_core.objective(traj),
        "min_value": traj.min_value,
        "max_value": traj.max_value,
        "steps": traj.n_levels - 1
    }]))
    return paths


def _run_method(cfg: ExperimentConfig, method: str) -> OptimizeResult:
    u0 = build_initial(cfg)
    model = cfg.reaction_model()
    tc = cfg.time_config()
    m = cfg.constraint.mass
    if method == "annealing":
        _require_seed(cfg, "anneal")
        return simulated_annealing(u0, model, tc, m, cfg.anneal_config())
    return optimize(u0, model, tc, m, cfg.optimizer_options())


def run_optimize(cfg: ExperimentConfig, out_dir: Path) -> list[Path]:
    result = _run_method(cfg, cfg.optimizer.method)
    paths = _write_result(result, cfg.reaction_model(), out_dir)
    paths.append(write_table(out_dir / "summary.csv", [_summary_row(result)]))
    return paths


def run_anneal(cfg: ExperimentConfig, out_dir: Path) -> list[Path]:
    result = _run_method(cfg, "annealing")
    paths = _write_result(result, cfg.reaction_model(), out_dir)
    paths.append(write_table(out_dir / "summary.csv", [_summary_row(result)]))
    return paths


def run_compare(cfg: ExperimentConfig, out_dir: Path) -> list[Path]:
    """고정점 방법과 모의 담금질을 같은 설정에서 실행해 비교표를 만든다"""
    _require_seed(cfg, "compare")
    methods = ["fixed_point", "annealing"]
    with ThreadPoolExecutor(max_workers=min(2, get_settings().rdseed_threads)) as pool:
        results = list(pool.map(lambda method: _run_method(cfg, method), methods))

    model = cfg.reaction_model()
    paths = []
    for method, result in zip(methods, results):
        sub_dir = out_dir / method
        _make_dir(sub_dir)
        paths += _write_result(result, model, sub_dir)
    baseline = results[0]
    rows = [
        {
            **_summary_row(r),
            "wall_ms": r.wall_s * 1e3,
            "solve_ratio": r.forward_solves / baseline.forward_solves
        }
        for r in results
    ]
    logger.info(
        "compare_completed",
        objectives=[r.objective for r in results],
        forward_solves=[r.forward_solves for r in results]
    )
    paths.append(write_table(out_dir / "summary.csv", rows))
    return paths


def run_grad_check(cfg: ExperimentConfig, out_dir: Path) -> list[Path]:
    seed = _require_seed(cfg, "grad-check")
    u0 = build_initial(cfg)
    model = cfg.reaction_model()
    tc = cfg.time_config()
    rng = np.random.default_rng(seed)
    directions = [random_direction(u0.grid, rng) for _ in range(cfg.checks.directions)]
    epsilons = cfg.checks.epsilons

    with _pool() as pool:
        checks = list(pool.map(lambda h0: adjoint_sens.gradient_check(u0, model, tc, h0, epsilons), directions))
    rows = [
        {"direction": d, **row.model_dump()}
        for d, direction_rows in enumerate(checks)
        for row in direction_rows
    ]
    paths = [write_table(out_dir / "grad_check.csv", rows)]

    hessian_rows = []
    for d, h0 in enumerate(directions[:HESSIAN_DIRECTIONS]):
        form = adjoint_sens.gradient_report(u0, model, tc, h0).hessian_form
        fd_value = adjoint_sens.hessian_fd_check(u0, model, tc, h0)
        hessian_rows.append({
            "direction": d,
            "hessian_form": form,
            "fd_value": fd_value,
            "rel_error": abs(form - fd_value) / max(abs(fd_value), np.finfo(float).tiny)
        })
    paths.append(write_table(out_dir / "hessian.csv", hessian_rows))

    ratio = adjoint_sens.dt_refinement_ratio(u0, model, tc, directions[0], eps=min(epsilons))
    paths.append(write_table(out_dir / "summary.csv", [{
        "worst_rel_error": max(r["rel_error"] for r in rows),
        "dt_refinement_ratio": ratio,
        "directions": len(directions)
    }]))
    return paths


def run_twoscale(cfg: ExperimentConfig, out_dir: Path) -> list[Path]:
    grid = cfg.grid()
    if not isinstance(grid, Grid1D):
        raise ConfigurationError("twoscale mode needs a 1D domain")
    ts = cfg.twoscale
    model = cfg.reaction_model()
    theta = make_cutoff(ts.a, ts.b, grid)
    background = block(grid, ts.background_mass or cfg.constraint.mass)
    tc = sweep_time_config(cfg.time.T, ts.k_list, grid, cfg.time.max_cfl)

    sweep = remainder_sweep(background, model, theta, ts.k_list, tc)
    rows = [
        {
            "k": int(k),
            "sup_norm": float(sup),
            "sup_norm_times_k2": float(bound),
            "alpha_k": float(alpha),
            "alpha_k_times_k4": float(alpha_k4),
            "integrated_times_k4": float(integ),
            "time_uniformity": float(t_ratio)
        }
        for k, sup, bound, alpha, alpha_k4, integ, t_ratio in zip(
            sweep.k_list, sweep.sup_norms, sweep.bound_constants,
            sweep.alpha, sweep.alpha_times_k4, sweep.integrated, sweep.time_uniformity
        )
    ]
    paths = [write_table(out_dir / "sweep.csv", rows)]
    paths.append(write_table(out_dir / "fit.csv", [{
        "slope": sweep.slope,
        "intercept": sweep.intercept,
        "r2": sweep.r2,
        "uniformity": sweep.uniformity
    }]))

    laplace_rows = [
        {
            "m": order,
            "k": int(k),
            "T": 1.0,
            "ratio": laplace_check(order, int(k), 1.0),
            "oracle": float(gammainc(order, float(k) ** 2))
        }
        for order in LAPLACE_ORDERS
        for k in ts.k_list
    ]
    paths.append(write_table(out_dir / "laplace.csv", laplace_rows))
    return paths


def run_convex_check(cfg: ExperimentConfig, out_dir: Path) -> list[Path]:
    seed = _require_seed(cfg, "convex-check")
    grid = cfg.grid()
    if not isinstance(grid, Grid1D):
        raise ConfigurationError("convex-check mode needs a 1D domain on (0, π)")
    model = cfg.reaction_model()
    tc = cfg.time_config()
    m = cfg.constraint.mass
    checks = cfg.checks

    block_report = convex_block_check(model, m, tc, checks.trials, seed, grid)
    paths = [write_table(out_dir / "block_check.csv", [row.model_dump() for row in block_report.rows])]
    summary = [{
        "check": f"block_{block_report.regime}",
        "passed": block_report.passed,
        "worst_margin": block_report.min_margin if block_report.regime != "concave" else block_report.max_margin
    }]

    if block_report.regime != "concave":
        extreme = extreme_point_check(model, m, tc, min(checks.trials, EXTREME_POINT_TRIALS), seed + 1, grid)
        paths.append(write_table(out_dir / "extreme_check.csv", [row.model_dump() for row in extreme.rows]))
        summary.append({"check": "extreme_point", "passed": extreme.passed, "worst_margin": extreme.min_margin})

        rng = np.random.default_rng(seed + 2)
        profiles = [random_bang_bang(grid, m, rng) for _ in range(checks.profiles)]
        radii = [grid.length * (i + 1) / (checks.r_samples + 1) for i in range(checks.r_samples)]
        with _pool() as pool:
            reports = list(pool.map(
                lambda u0: parabolic_comparison_check(model, u0, tc, radii, checks.t_samples),
                profiles
            ))
        rows = [
            {"profile": p, **row.model_dump()}
            for p, report in enumerate(reports)
            for row in report.rows
        ]
        paths.append(write_table(out_dir / "comparison.csv", rows))
        summary.append({
            "check": "parabolic_comparison",
            "passed": all(r.passed for r in reports),
            "worst_margin": min(r.worst_margin for r in reports)
        })

    paths.append(write_table(out_dir / "summary.csv", summary))
    return paths


HANDLERS: dict[str, Handler] = {
    "forward": run_forward,
    "optimize": run_optimize,
    "anneal": run_anneal,
    "grad-check": run_grad_check,
    "twoscale": run_twoscale,
    "convex-check": run_convex_check,
    "compare": run_compare,
}


def _make_dir(path: Path) -> None:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise PersistenceError(f"cannot create {path}: {e}") from e


def run_directory(cfg: ExperimentConfig, mode: str, out_dir: str | Path | None = None) -> Path:
    if out_dir is not None:
        return Path(out_dir)
    return Path(cfg.output.dir or get_settings().output_dir) / mode


def run_experiment(cfg: ExperimentConfig, mode: str, out_dir: str | Path | None = None) -> int:
    """모드를 실행하고 산출물과 manifest.json 을 쓴다. 성공하면 0"""
    if mode not in HANDLERS:
        raise ConfigurationError(f"unknown mode '{mode}', expected one of {', '.join(HANDLERS)}")
    run_dir = run_directory(cfg, mode, out_dir)
    digest = config_hash(cfg)

    try:
        logger.info("experiment_request", mode=mode, run_dir=str(run_dir), config_hash=digest)
        _make_dir(run_dir)
        _write_text(run_dir / "config.ini", dump_config(cfg))

        artifacts = HANDLERS[mode](cfg, run_dir)

        manifest = {
            "mode": mode,
            "version": __version__,
            "config_hash": digest,
            "artifacts": sorted(str(p.relative_to(run_dir)) for p in artifacts)
        }
        _write_text(run_dir / "manifest.json", json.dumps(manifest, indent=2) + "\n")

        logger.info("experiment_success", mode=mode, artifacts=len(artifacts))
        return 0

    except RdOptError as e:
        logger.error(
            "experiment_error",
            mode=mode,
            error=str(e),
            error_type=type(e).__name__
        )
        raise
