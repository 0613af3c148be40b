from typing import Literal
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class DistributionFunction(BaseModel):
    """μ_u(t) = |{u >= t}| 를 값 레벨마다 기록"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    levels: np.ndarray = Field(..., description="오름차순 고유 값")
    measures: np.ndarray = Field(..., description="각 레벨의 |{u >= level}|")

    @model_validator(mode="after")
    def _check_monotone(self) -> "DistributionFunction":
        if self.levels.shape != self.measures.shape:
            raise ValueError("levels and measures must have the same length")
        if np.any(np.diff(self.measures) > 0):
            raise ValueError("measures must be non-increasing in level")
        return self

    @property
    def total_measure(self) -> float:
        return float(self.measures[0]) if self.measures.size else 0.0

    def __call__(self, t) -> np.ndarray | float:
        """임의 레벨 t 에서 μ(t) (계단 함수)"""
        idx = np.searchsorted(self.levels, t, side="left")
        padded = np.append(self.measures, 0.0)
        out = padded[idx]
        return float(out) if np.ndim(out) == 0 else out


class BlockCheckRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    trial: int
    description: str
    J_block: float
    J_candidate: float
    margin: float = Field(..., description="J_block - J_candidate")


class BlockCheckReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    regime: Literal["convex", "concave", "linear"]
    rows: list[BlockCheckRow]
    min_margin: float
    max_margin: float
    tolerance: float
    passed: bool


class ExtremePointRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    trial: int
    J_bang_bang: float
    J_profile: float
    margin: float = Field(..., description="J_bang_bang - J_profile")


class ExtremePointReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    rows: list[ExtremePointRow]
    min_margin: float
    tolerance: float
    passed: bool


class ComparisonRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: float
    r: float
    lhs: float = Field(..., description="∫_{-r}^{r} v(t), 재배열된 초기값에서 출발한 해")
    rhs: float = Field(..., description="∫_{-r}^{r} u*(t), 해의 재배열")
    margin: float


class ComparisonReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    rows: list[ComparisonRow]
    worst_margin: float
    tolerance: float
    passed: bool
