from typing import Literal
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from rdopt.models.grid import ScalarField

RootRule = Literal["concave", "convex", "best"]


class BathtubSplit(BaseModel):
    """p0 의 레벨 c 에 의한 분할: {p0 > c+ε}, {p0 < c-ε}, {|p0-c| <= ε}, 경계 셀"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    c: float = Field(..., description="임계 레벨 c̄")
    upper_cells: np.ndarray = Field(..., description="u0 = 1 인 셀 (평탄화된 인덱스)")
    lower_cells: np.ndarray = Field(..., description="u0 = 0 인 셀")
    flat_cells: np.ndarray = Field(..., description="특이호 후보 셀")
    eps_flat: float = Field(..., ge=0)
    threshold_cell: int | None = Field(None, description="평탄 구역이 없을 때 비율로 채우는 셀")
    threshold_fill: float = Field(0.0, ge=0, le=1)

    @property
    def flat_count(self) -> int:
        return int(self.flat_cells.size)


class OptimizerOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_iter: int = Field(100, ge=1)
    tol: float = Field(1e-6, gt=0)
    patience: int = Field(3, ge=1, description="상대 변화 < tol 이 연속해야 하는 횟수")
    eps_flat: float = Field(1e-4, ge=0, description="(max p0 - min p0) 대비 평탄 구역 폭")
    root_rule: RootRule = "concave"
    max_halvings: int = Field(8, ge=0)
    timings: bool = True


class OptimizerState(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    iterate: ScalarField
    objective: float
    adjoint0: ScalarField
    pt0: ScalarField
    split: BathtubSplit
    iteration: int = 0
    damping: float = Field(0.0, description="마지막으로 채택된 τ")
    converged: bool = False
    stalled: bool = False
    fallback_cells: int = 0
    forward_solves: int = 0


class AnnealConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    initial_temp: float | None = Field(None, ge=0, description="None 이면 0.1·J(init)")
    cooling: float = Field(0.95, gt=0, lt=1)
    moves_per_temp: int = Field(50, ge=1)
    move_mass: float | None = Field(None, gt=0, description="None 이면 m/50")
    seed: int
    max_evaluations: int = Field(2000, ge=1)
    timings: bool = True


class IterationRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    iter: int
    objective: float
    threshold_c: float | None = None
    flat_cell_count: int | None = None
    tau: float | None = None
    temperature: float | None = None
    acceptance_rate: float | None = None
    wall_ms: float = 0.0


class OptimizeResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    method: Literal["fixed_point", "annealing"]
    final: ScalarField
    objective: float
    initial_objective: float
    trace: list[IterationRecord]
    converged: bool
    stalled: bool = False
    iterations: int
    forward_solves: int
    fallback_cell_count: int = 0
    arc_cell_count: int = 0
    adjoint0: ScalarField | None = None
    threshold_c: float | None = None
    wall_s: float = 0.0


class Prop1Report(BaseModel):
    model_config = ConfigDict(frozen=True)

    status: Literal["empty singular arc", "passed", "violated"]
    passed: bool
    max_fpp_on_arc: float | None
    arc_cell_count: int
    violating_fraction: float
    fallback_cell_count: int
    delta_arc: float
    tolerance: float

    @model_validator(mode="after")
    def _check_status(self) -> "Prop1Report":
        if self.status == "violated" and self.passed:
            raise ValueError("violated report cannot pass")
        return self


class ArcFill(BaseModel):
    """특이호 셀에 채울 값 (split.flat_cells 순서)"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray
    fallback: np.ndarray = Field(..., description="근이 없어 끝점으로 대체된 셀")
    concavity: np.ndarray = Field(..., description="선택된 값에서 f'' 의 부호")

    @property
    def fallback_count(self) -> int:
        return int(np.count_nonzero(self.fallback))
