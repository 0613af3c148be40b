"""bathtub 분할, 특이호 채우기, 고정점 반복"""

import math
import numpy as np
import pytest
from rdopt.errors import ConstraintError
from rdopt.models.grid import Grid1D, ScalarField, TimeConfig
from rdopt.models.optimizer import BathtubSplit, OptimizeResult, OptimizerOptions
from rdopt.models.reaction import ReactionModel
from rdopt.services import pde_core
from rdopt.services.initial_data import block, rasterize_interval
from rdopt.services.nonlinearity import evaluate
from rdopt.services.optimizer import (
    bathtub_split,
    build_candidate,
    fixed_point_step,
    initial_state,
    optimize,
    prop1_certificate,
    singular_arc_fill,
)

MASS = 3.0
UNIT = Grid1D(xmin=0.0, xmax=1.0, n=101)


@pytest.fixture
def small_problem(bistable):
    grid = Grid1D(xmin=-10.0, xmax=10.0, n=101)
    return block(grid, MASS), bistable, TimeConfig(T=5.0, nt=250)


def test_affine_p0_splits_at_the_median():
    p0 = ScalarField(grid=UNIT, values=2.0 - UNIT.nodes())
    split = bathtub_split(p0, 0.5, 1e-4)

    assert math.isclose(split.c, 1.5, abs_tol=1e-12)
    assert split.flat_count == 0
    assert split.threshold_cell == 50
    assert math.isclose(split.threshold_fill, 0.5, abs_tol=1e-9)
    np.testing.assert_array_equal(split.upper_cells, np.arange(50))
    np.testing.assert_array_equal(split.lower_cells, np.arange(51, 101))


def test_plateau_becomes_flat_band():
    x = UNIT.nodes()
    p0 = ScalarField(grid=UNIT, values=np.where(x < 0.295, 2.0, 1.0))
    split = bathtub_split(p0, 0.5, 1e-6)

    assert split.c == 1.0
    assert split.threshold_cell is None
    assert split.flat_count == 71
    assert split.upper_cells.size == 30
    w = UNIT.weights()
    assert float(np.sum(w[split.upper_cells])) < 0.5 <= float(np.sum(w[split.upper_cells])) + float(np.sum(w[split.flat_cells]))


@pytest.mark.parametrize("m", [0.0, 1.0, 1.5])
def test_mass_outside_domain_measure_is_rejected(m):
    p0 = ScalarField(grid=UNIT, values=2.0 - UNIT.nodes())
    with pytest.raises(ConstraintError):
        bathtub_split(p0, m, 1e-4)


def _arc_split(cells: int) -> BathtubSplit:
    empty = np.array([], dtype=int)
    return BathtubSplit(c=1.0, upper_cells=empty, lower_cells=empty, flat_cells=np.arange(cells), eps_flat=0.0)


@pytest.mark.parametrize("rule, expected", [("concave", 0.6), ("convex", (2.5 - 1.1) / 6.0)])
def test_singular_arc_root_selection(bistable, rule, expected):
    grid = Grid1D(xmin=0.0, xmax=1.0, n=3)
    p0 = ScalarField.constant(grid, 1.0)
    pt0 = ScalarField.constant(grid, -evaluate(bistable, 1, 0.6))

    fill = singular_arc_fill(bistable, _arc_split(3), p0, pt0, rule=rule)
    np.testing.assert_allclose(fill.values, expected, atol=1e-12)
    assert fill.fallback_count == 0


def test_unreachable_arc_falls_back_to_nearest_endpoint(bistable):
    grid = Grid1D(xmin=0.0, xmax=1.0, n=3)
    fill = singular_arc_fill(
        bistable,
        _arc_split(3),
        ScalarField.constant(grid, 1.0),
        ScalarField.constant(grid, -1.0)
    )
    # f'(0) = -0.25 가 f'(1) = -0.75 보다 목표 1 에 가깝다
    np.testing.assert_array_equal(fill.values, 0.0)
    assert fill.fallback_count == 3


def test_candidate_has_exact_mass(small_problem):
    u0, model, tc = small_problem
    state = initial_state(u0, model, tc, MASS)
    cand, _ = build_candidate(state, model, MASS)
    assert math.isclose(float(np.sum(u0.grid.weights() * cand)), MASS, rel_tol=1e-12)
    assert cand.min() >= 0.0 and cand.max() <= 1.0


def test_block_is_a_fixed_point_for_convex_reaction():
    grid = Grid1D(xmin=0.0, xmax=math.pi, n=201)
    model = ReactionModel.convex_power(2.0)
    tc = TimeConfig(T=0.5, nt=500)
    u0 = rasterize_interval(grid, 0.0, 1.0)

    state = initial_state(u0, model, tc, 1.0)
    step = fixed_point_step(state, model, tc)
    assert step.converged
    assert not step.stalled
    assert step.objective == state.objective


def test_fallback_count_resets_on_a_step_that_does_not_move():
    grid = Grid1D(xmin=0.0, xmax=math.pi, n=201)
    model = ReactionModel.convex_power(2.0)
    tc = TimeConfig(T=0.5, nt=500)
    state = initial_state(rasterize_interval(grid, 0.0, 1.0), model, tc, 1.0)

    step = fixed_point_step(state.model_copy(update={"fallback_cells": 5}), model, tc)
    assert step.converged
    assert step.fallback_cells == 0


def test_every_accepted_step_strictly_improves(small_problem):
    block_u0, model, tc = small_problem
    # 높이 1/2, 폭 6 인 블록: 질량은 같고 bang-bang 이 아님
    u0 = block_u0.with_values(0.5 * rasterize_interval(block_u0.grid, -3.0, 3.0).values)
    state = initial_state(u0, model, tc, MASS)
    accepted = 0
    for _ in range(5):
        step = fixed_point_step(state, model, tc)
        if step.converged:
            break
        assert 0.0 < step.damping <= 1.0
        assert step.objective > state.objective
        assert math.isclose(pde_core.mass(step.iterate), MASS, rel_tol=1e-10)
        accepted += 1
        state = step
    assert accepted >= 1


def test_optimize_keeps_iterates_admissible_and_monotone(small_problem):
    u0, model, tc = small_problem
    result = optimize(u0, model, tc, MASS, OptimizerOptions(max_iter=6, timings=False))

    objectives = [record.objective for record in result.trace]
    assert objectives[0] == result.initial_objective
    assert all(b >= a for a, b in zip(objectives, objectives[1:]))
    assert result.objective >= result.initial_objective
    assert math.isclose(pde_core.mass(result.final), MASS, rel_tol=1e-10)
    assert result.final.values.min() >= 0.0 and result.final.values.max() <= 1.0
    assert result.forward_solves >= result.iterations
    assert all(record.wall_ms == 0.0 for record in result.trace)


def test_optimize_is_deterministic(small_problem):
    u0, model, tc = small_problem
    opts = OptimizerOptions(max_iter=4, timings=False)
    first = optimize(u0, model, tc, MASS, opts)
    second = optimize(u0, model, tc, MASS, opts)
    assert [r.model_dump() for r in first.trace] == [r.model_dump() for r in second.trace]
    np.testing.assert_array_equal(first.final.values, second.final.values)


def test_initial_mass_mismatch_is_rejected(small_problem):
    u0, model, tc = small_problem
    with pytest.raises(ConstraintError, match="initial mass"):
        optimize(u0, model, tc, MASS + 0.5)


def _result_with(values: np.ndarray) -> OptimizeResult:
    field = ScalarField(grid=UNIT, values=values)
    return OptimizeResult(
        method="fixed_point",
        final=field,
        objective=1.0,
        initial_objective=1.0,
        trace=[],
        converged=True,
        iterations=0,
        forward_solves=1
    )


def test_certificate_for_bang_bang_result(bistable):
    values = np.where(UNIT.nodes() < 0.5, 1.0, 0.0)
    report = prop1_certificate(_result_with(values), bistable)
    assert report.status == "empty singular arc"
    assert report.passed


def test_certificate_accepts_concave_arc(bistable):
    values = np.where(np.abs(UNIT.nodes() - 0.5) < 0.1, 0.8, 0.0)
    report = prop1_certificate(_result_with(values), bistable)
    assert report.status == "passed"
    assert report.arc_cell_count > 0
    assert report.max_fpp_on_arc < 0.0


def test_certificate_flags_convex_arc(bistable):
    values = np.where(np.abs(UNIT.nodes() - 0.5) < 0.1, 0.2, 0.0)
    report = prop1_certificate(_result_with(values), bistable)
    assert report.status == "violated"
    assert not report.passed
    assert report.violating_fraction == 1.0
