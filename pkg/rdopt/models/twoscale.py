import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from rdopt.models.grid import Grid1D, ScalarField


class CutoffProfile(BaseModel):
    """(a, b) 에 컴팩트 지지를 갖는 절단 함수 θ 와 정확한 θ'"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    a: float
    b: float
    field: ScalarField = Field(..., description="θ")
    dfield: ScalarField = Field(..., description="θ'")

    @model_validator(mode="after")
    def _check_support(self) -> "CutoffProfile":
        if not self.a < self.b:
            raise ValueError("cutoff support requires a < b")
        if self.field.grid != self.dfield.grid:
            raise ValueError("θ and θ' must share a grid")
        return self

    @property
    def grid(self) -> Grid1D:
        return self.field.grid

    @classmethod
    def constant(cls, grid: Grid1D) -> "CutoffProfile":
        """θ ≡ 1 (고유함수 검사용 퇴화 절단)"""
        return cls(
            a=grid.xmin,
            b=grid.xmax,
            field=ScalarField.constant(grid, 1.0),
            dfield=ScalarField.constant(grid, 0.0)
        )


class RemainderSweep(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    k_list: np.ndarray
    sup_norms: np.ndarray = Field(..., description="sup_t ||R_k(t)||_L2")
    slope: float = Field(..., description="log sup_norm 대 log k 기울기")
    intercept: float
    r2: float
    alpha: np.ndarray = Field(..., description="α_k = -∫θcos(kx) / ∫θ")
    bound_constants: np.ndarray = Field(..., description="sup_norm · k^2")
    integrated: np.ndarray = Field(..., description="∬R_k^2 · k^4")
    times: np.ndarray = Field(..., description="저장된 시간 레벨")
    norms: np.ndarray = Field(..., description="||R_k(t)||_L2, k 별 행")

    @field_validator("k_list")
    @classmethod
    def _check_increasing(cls, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=int)
        if v.size == 0 or np.any(v < 1) or np.any(np.diff(v) <= 0):
            raise ValueError("k_list must be strictly increasing positive integers")
        return v

    @property
    def uniformity(self) -> float:
        """k 에 걸친 max/min (sup_norm · k^2)"""
        return float(np.max(self.bound_constants) / np.min(self.bound_constants))

    @property
    def alpha_times_k4(self) -> np.ndarray:
        return np.abs(self.alpha) * self.k_list.astype(float) ** 4

    @property
    def time_uniformity(self) -> np.ndarray:
        """k 별 max/min over t >= 1/k² of  k² sup_{0<s<=t} ||R_k(s)||

        R_k(0) = 0 이므로 누적 상한을 첫 시간 척도 1/k² 부터 비교한다.
        """
        positive = self.times > 0
        first = self.times[positive][0]
        ratios = []
        for k, n in zip(self.k_list, self.norms):
            early = positive & (self.times <= max(1.0 / float(k) ** 2, first))
            top, head = float(np.max(n[positive])), float(np.max(n[early]))
            if head > 0:
                ratios.append(top / head)
            else:
                ratios.append(1.0 if top == 0 else np.inf)
        return np.array(ratios)
