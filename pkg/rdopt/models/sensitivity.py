import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from rdopt.models.grid import Grid, ScalarField, Trajectory


class AdjointTrajectory(BaseModel):
    """수반 상태 p: -p_t - Δp = f'(u) p, p(T) = 1"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    times: np.ndarray
    values: np.ndarray
    forward: Trajectory

    @model_validator(mode="after")
    def _check_mesh(self) -> "AdjointTrajectory":
        if self.values.shape != self.forward.values.shape:
            raise ValueError("adjoint and forward trajectories must share the grid/time mesh")
        return self

    @property
    def n_levels(self) -> int:
        return len(self.times)

    def field(self, index: int) -> ScalarField:
        return ScalarField(grid=self.grid, values=self.values[index])

    @property
    def initial(self) -> ScalarField:
        return self.field(0)


class GradientReport(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    gradient_field: ScalarField = Field(..., description="p(0, ·)")
    directional: float | None = Field(None, description="<p(0,·), h0>")
    hessian_form: float | None = Field(None, description="∬ f''(u) p h^2")


class GradientCheckRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    epsilon: float
    fd_value: float
    adjoint_value: float
    rel_error: float
