"""질량 보존 이동을 쓰는 모의 담금질 기준선

한 번의 이동은 두 셀 사이에서 질량 δ 를 옮긴다. [0, 1] 범위를 지키도록
δ 의 상한을 두므로 모든 반복값이 허용 집합 안에 남는다.
"""

import math
import time
import numpy as np
import structlog
from rdopt.models.grid import ScalarField, TimeConfig
from rdopt.models.optimizer import AnnealConfig, IterationRecord, OptimizeResult
from rdopt.models.reaction import ReactionModel
from rdopt.services import pde_core
from rdopt.services.optimizer import check_admissible

logger = structlog.get_logger()


def propose_move(
    u: np.ndarray,
    w: np.ndarray,
    move_mass: float,
    rng: np.random.Generator
) -> np.ndarray | None:
    """셀 i 에서 셀 j 로 질량을 옮긴 새 배열. 옮길 곳이 없으면 None"""
    donors = np.flatnonzero(u > 0.0)
    receivers = np.flatnonzero(u < 1.0)
    if donors.size == 0 or receivers.size == 0:
        return None
    i = int(donors[rng.integers(donors.size)])
    receivers = receivers[receivers != i]
    if receivers.size == 0:
        return None
    j = int(receivers[rng.integers(receivers.size)])

    cap = min(move_mass, u[i] * w[i], (1.0 - u[j]) * w[j])
    delta = rng.uniform(0.0, cap)
    out = u.copy()
    out[i] = max(u[i] - delta / w[i], 0.0)
    out[j] = min(u[j] + delta / w[j], 1.0)
    return out


def simulated_annealing(
    u0_init: ScalarField,
    model: ReactionModel,
    tc: TimeConfig,
    m: float,
    cfg: AnnealConfig
) -> OptimizeResult:
    check_admissible(u0_init, m)
    started = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    shape = u0_init.grid.shape
    w = u0_init.grid.weights().ravel()

    current = u0_init.values.ravel().copy()
    current_value = pde_core.evaluate(u0_init, model, tc)
    initial_objective = current_value
    best, best_value = current.copy(), current_value
    evaluations = 1

    temperature = 0.1 * current_value if cfg.initial_temp is None else cfg.initial_temp
    move_mass = m / 50.0 if cfg.move_mass is None else cfg.move_mass
    logger.info(
        "annealing_started",
        objective=current_value,
        initial_temp=temperature,
        move_mass=move_mass,
        seed=cfg.seed
    )

    trace = [IterationRecord(iter=0, objective=current_value, temperature=temperature)]
    level = 0
    while evaluations < cfg.max_evaluations:
        accepted = tried = 0
        tick = time.perf_counter()
        for _ in range(cfg.moves_per_temp):
            if evaluations >= cfg.max_evaluations:
                break
            proposal = propose_move(current, w, move_mass, rng)
            if proposal is None:
                break
            value = pde_core.evaluate(u0_init.with_values(proposal.reshape(shape)), model, tc)
            evaluations += 1
            tried += 1

            gain = value - current_value
            # 온도 0 이면 탐욕적 언덕 오르기
            threshold = math.exp(gain / temperature) if temperature > 0.0 and gain < 0.0 else 0.0
            draw = rng.random()
            if gain >= 0.0 or draw < threshold:
                current, current_value = proposal, value
                accepted += 1
                if value > best_value:
                    best, best_value = proposal.copy(), value

        level += 1
        trace.append(IterationRecord(
            iter=level,
            objective=current_value,
            temperature=temperature,
            acceptance_rate=accepted / tried if tried else 0.0,
            wall_ms=(time.perf_counter() - tick) * 1e3 if cfg.timings else 0.0
        ))
        logger.debug(
            "annealing_level",
            level=level,
            temperature=temperature,
            objective=current_value,
            best=best_value,
            acceptance_rate=accepted / tried if tried else 0.0
        )
        if tried == 0:
            break
        temperature *= cfg.cooling

    wall_s = time.perf_counter() - started
    logger.info(
        "annealing_finished",
        objective=best_value,
        evaluations=evaluations,
        levels=level,
        wall_s=round(wall_s, 3)
    )

    return OptimizeResult(
        method="annealing",
        final=u0_init.with_values(best.reshape(shape)),
        objective=best_value,
        initial_objective=initial_objective,
        trace=trace,
        converged=False,
        iterations=level,
        forward_solves=evaluations,
        wall_s=wall_s if cfg.timings else 0.0
    )
