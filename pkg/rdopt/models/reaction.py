from typing import Literal
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

ReactionKind = Literal["bistable", "monostable", "convex", "cubic"]

# 최적화 중간값이 [0, 1] 을 잠시 벗어날 수 있으므로 확장 구간에서 평가한다
EXTENDED_RANGE = (-0.5, 1.5)


class ReactionModel(BaseModel):
    """반응항 f 와 정확한 f', f'' (닫힌 형태)"""

    model_config = ConfigDict(frozen=True)

    kind: ReactionKind = Field(..., description="bistable | monostable | convex | cubic")
    theta: float | None = Field(None, description="bistable/monostable 파라미터 θ ∈ (0,1)")
    a: float | None = Field(None, description="convex 지수 a > 1")
    coeffs: tuple[float, float, float, float] | None = Field(
        None, description="cubic 계수 (c3, c2, c1, c0)"
    )

    @model_validator(mode="after")
    def _check_parameters(self) -> "ReactionModel":
        if self.kind in ("bistable", "monostable"):
            if self.theta is None or not 0.0 < self.theta < 1.0:
                raise ValueError(f"{self.kind} requires theta in (0, 1)")
        elif self.kind == "convex":
            if self.a is None or not self.a > 1.0:
                raise ValueError("convex requires a > 1")
        elif self.coeffs is None:
            raise ValueError("cubic requires coeffs = (c3, c2, c1, c0)")
        return self

    @classmethod
    def bistable(cls, theta: float) -> "ReactionModel":
        return cls(kind="bistable", theta=theta)

    @classmethod
    def monostable_shifted(cls, theta: float) -> "ReactionModel":
        return cls(kind="monostable", theta=theta)

    @classmethod
    def convex_power(cls, a: float) -> "ReactionModel":
        return cls(kind="convex", a=a)

    @classmethod
    def cubic_custom(cls, c3: float, c2: float, c1: float, c0: float) -> "ReactionModel":
        return cls(kind="cubic", coeffs=(c3, c2, c1, c0))

    def cubic_coefficients(self) -> tuple[float, float, float, float] | None:
        if self.kind == "bistable":
            # u(1-u)(u-θ) = -u^3 + (1+θ)u^2 - θu
            return (-1.0, 1.0 + self.theta, -self.theta, 0.0)
        if self.kind == "monostable":
            # (u+θ)u(1-u) = -u^3 + (1-θ)u^2 + θu
            return (-1.0, 1.0 - self.theta, self.theta, 0.0)
        if self.kind == "cubic":
            return self.coeffs
        return None

    def f(self, v):
        v = np.asarray(v, dtype=float)
        c = self.cubic_coefficients()
        if c is None:
            return np.abs(v) ** self.a / self.a
        c3, c2, c1, c0 = c
        return ((c3 * v + c2) * v + c1) * v + c0

    def df(self, v):
        v = np.asarray(v, dtype=float)
        c = self.cubic_coefficients()
        if c is None:
            return np.sign(v) * np.abs(v) ** (self.a - 1.0)
        c3, c2, c1, _ = c
        return (3.0 * c3 * v + 2.0 * c2) * v + c1

    def d2f(self, v):
        v = np.asarray(v, dtype=float)
        c = self.cubic_coefficients()
        if c is None:
            with np.errstate(divide="ignore"):
                return (self.a - 1.0) * np.abs(v) ** (self.a - 2.0)
        c3, c2, _, _ = c
        return 6.0 * c3 * v + 2.0 * c2

    def derivative(self, order: int, v):
        if order == 0:
            return self.f(v)
        if order == 1:
            return self.df(v)
        if order == 2:
            return self.d2f(v)
        raise ValueError(f"order must be 0, 1 or 2, got {order}")

    def lipschitz(self, lo: float = EXTENDED_RANGE[0], hi: float = EXTENDED_RANGE[1]) -> float:
        samples = np.linspace(lo, hi, 2001)
        return float(np.max(np.abs(self.df(samples))))

    def has_unit_equilibria(self) -> bool:
        return abs(float(self.f(0.0))) <= 1e-14 and abs(float(self.f(1.0))) <= 1e-14

    def is_convex_on(self, lo: float = 0.0, hi: float = 1.0) -> bool:
        return bool(np.all(self.d2f(np.linspace(lo, hi, 1001)) >= -1e-12))

    def is_concave_on(self, lo: float = 0.0, hi: float = 1.0) -> bool:
        return bool(np.all(self.d2f(np.linspace(lo, hi, 1001)) <= 1e-12))


class FPrimeRoot(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float = Field(..., description="f'(v) = target 의 근")
    concavity: int = Field(..., description="f''(v) 의 부호 (-1, 0, +1)")
