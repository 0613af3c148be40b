import math
from typing import Literal
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from rdopt.models.reaction import ReactionModel


def nodes_for_spacing(width: float, dx_max: float) -> int:
    """dx <= dx_max 를 만족하는 최소 노드 수 (꼭짓점 중심 격자)"""
    return int(math.ceil(width / dx_max - 1e-12)) + 1


class Grid1D(BaseModel):
    model_config = ConfigDict(frozen=True)

    xmin: float = Field(..., description="구간 왼쪽 끝")
    xmax: float = Field(..., description="구간 오른쪽 끝")
    n: int = Field(..., ge=3, description="노드 수 (경계 노드 포함)")
    boundary: Literal["neumann", "periodic"] = Field("neumann", description="경계 조건 태그")

    @model_validator(mode="after")
    def _check_extent(self) -> "Grid1D":
        if not self.xmax > self.xmin:
            raise ValueError("xmax must be greater than xmin")
        return self

    @property
    def ndim(self) -> int:
        return 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,)

    @property
    def length(self) -> float:
        return self.xmax - self.xmin

    @property
    def measure(self) -> float:
        return self.length

    @property
    def dx(self) -> float:
        # periodic 격자는 xmax 노드를 xmin 과 동일시한다
        if self.boundary == "periodic":
            return self.length / self.n
        return self.length / (self.n - 1)

    @property
    def min_spacing(self) -> float:
        return self.dx

    def nodes(self) -> np.ndarray:
        return self.xmin + self.dx * np.arange(self.n)

    def weights(self) -> np.ndarray:
        """사다리꼴 규칙 가중치 (periodic 이면 균일)"""
        w = np.full(self.n, self.dx)
        if self.boundary == "neumann":
            w[0] = w[-1] = 0.5 * self.dx
        return w


class Grid2D(BaseModel):
    model_config = ConfigDict(frozen=True)

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    nx: int = Field(..., ge=3)
    ny: int = Field(..., ge=3)
    boundary: Literal["neumann"] = "neumann"

    @model_validator(mode="after")
    def _check_extent(self) -> "Grid2D":
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError("degenerate rectangle")
        return self

    @property
    def ndim(self) -> int:
        return 2

    @property
    def shape(self) -> tuple[int, ...]:
        # 행 = y, 열 = x (row-major)
        return (self.ny, self.nx)

    @property
    def x_grid(self) -> Grid1D:
        return Grid1D(xmin=self.xmin, xmax=self.xmax, n=self.nx)

    @property
    def y_grid(self) -> Grid1D:
        return Grid1D(xmin=self.ymin, xmax=self.ymax, n=self.ny)

    @property
    def dx(self) -> float:
        return self.x_grid.dx

    @property
    def dy(self) -> float:
        return self.y_grid.dx

    @property
    def min_spacing(self) -> float:
        return min(self.dx, self.dy)

    @property
    def measure(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_grid.nodes(), self.y_grid.nodes(), indexing="xy")

    def weights(self) -> np.ndarray:
        return np.outer(self.y_grid.weights(), self.x_grid.weights())


Grid = Grid1D | Grid2D


class ScalarField(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _as_float_array(cls, v):
        return np.array(v, dtype=float)

    @model_validator(mode="after")
    def _check_values(self) -> "ScalarField":
        if self.values.size != int(np.prod(self.grid.shape)):
            raise ValueError(
                f"field has {self.values.size} values, grid expects {int(np.prod(self.grid.shape))}"
            )
        if self.values.shape != self.grid.shape:
            object.__setattr__(self, "values", self.values.reshape(self.grid.shape))
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")
        return self

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(grid=self.grid, values=values)

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid=grid, values=np.full(grid.shape, float(value)))


class TorusField(ScalarField):
    """[-π, π) 위의 주기 함수 값"""

    @model_validator(mode="after")
    def _check_periodic(self) -> "TorusField":
        if not isinstance(self.grid, Grid1D) or self.grid.boundary != "periodic":
            raise ValueError("torus field requires a periodic 1D grid")
        return self

    def center_index(self) -> int:
        return int(np.argmin(np.abs(self.grid.nodes())))


class TimeConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    T: float = Field(..., gt=0, description="최종 시간")
    nt: int = Field(..., ge=1, description="시간 스텝 수")
    fine_until: float = Field(0.0, ge=0, description="초기 세밀 구간 끝")
    fine_steps: int = Field(0, ge=0, description="초기 세밀 구간 스텝 수")
    max_cfl: float = Field(100.0, gt=0, description="dt/dx^2 허용 상한")

    @model_validator(mode="after")
    def _check_fine_region(self) -> "TimeConfig":
        if (self.fine_until > 0) != (self.fine_steps > 0):
            raise ValueError("fine_until and fine_steps must be set together")
        if self.fine_until >= self.T:
            raise ValueError("fine_until must be smaller than T")
        return self

    @property
    def dt(self) -> float:
        return (self.T - self.fine_until) / self.nt

    @property
    def n_steps(self) -> int:
        return self.nt + self.fine_steps

    def levels(self) -> np.ndarray:
        if self.fine_steps == 0:
            return np.linspace(0.0, self.T, self.nt + 1)
        fine = np.linspace(0.0, self.fine_until, self.fine_steps + 1)
        tail = np.linspace(self.fine_until, self.T, self.nt + 1)
        return np.concatenate([fine, tail[1:]])

    def max_step(self) -> float:
        return float(np.max(np.diff(self.levels())))

    def first_step(self) -> float:
        levels = self.levels()
        return float(levels[1] - levels[0])


class Trajectory(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    times: np.ndarray
    values: np.ndarray
    model: ReactionModel

    @model_validator(mode="after")
    def _check_shapes(self) -> "Trajectory":
        if self.values.shape != (len(self.times), *self.grid.shape):
            raise ValueError("trajectory values do not match times/grid")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        return self

    @property
    def n_levels(self) -> int:
        return len(self.times)

    def field(self, index: int) -> ScalarField:
        return ScalarField(grid=self.grid, values=self.values[index])

    @property
    def initial(self) -> ScalarField:
        return self.field(0)

    @property
    def final(self) -> ScalarField:
        return self.field(-1)

    @property
    def min_value(self) -> float:
        return float(np.min(self.values))

    @property
    def max_value(self) -> float:
        return float(np.max(self.values))
