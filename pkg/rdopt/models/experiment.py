import math
from typing import Literal
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from rdopt.models.grid import Grid, Grid1D, Grid2D, TimeConfig, nodes_for_spacing
from rdopt.models.optimizer import AnnealConfig, OptimizerOptions, RootRule
from rdopt.models.reaction import ReactionModel


def _split_list(v):
    if isinstance(v, str):
        return [item.strip() for item in v.split(",") if item.strip()]
    return v


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class DomainSection(_Section):
    xmin: float
    xmax: float
    nx: int | None = Field(None, ge=3)
    dx_max: float | None = Field(None, gt=0, description="nx 대신 최대 격자 간격")
    ymin: float | None = None
    ymax: float | None = None
    ny: int | None = Field(None, ge=3)
    boundary: Literal["neumann", "periodic"] = "neumann"

    @model_validator(mode="after")
    def _check_resolution(self) -> "DomainSection":
        if self.nx is None and self.dx_max is None:
            raise ValueError("either nx or dx_max is required")
        two_d = (self.ymin, self.ymax)
        if any(v is not None for v in two_d) and any(v is None for v in two_d):
            raise ValueError("2D domains need both ymin and ymax")
        if self.ymin is not None and self.ny is None and self.dx_max is None:
            raise ValueError("2D domains need ny or dx_max")
        return self

    @property
    def is_2d(self) -> bool:
        return self.ymin is not None

    def grid(self) -> Grid:
        nx = self.nx or nodes_for_spacing(self.xmax - self.xmin, self.dx_max)
        if not self.is_2d:
            return Grid1D(xmin=self.xmin, xmax=self.xmax, n=nx, boundary=self.boundary)
        ny = self.ny or nodes_for_spacing(self.ymax - self.ymin, self.dx_max)
        return Grid2D(xmin=self.xmin, xmax=self.xmax, ymin=self.ymin, ymax=self.ymax, nx=nx, ny=ny)


class TimeSection(_Section):
    T: float = Field(..., gt=0)
    nt: int = Field(..., ge=1)
    max_cfl: float = Field(100.0, gt=0)
    fine_until: float = Field(0.0, ge=0)
    fine_steps: int = Field(0, ge=0)

    def time_config(self) -> TimeConfig:
        return TimeConfig(**self.model_dump())


class ReactionSection(_Section):
    kind: Literal["bistable", "monostable", "convex", "cubic"]
    theta: float | None = None
    a: float | None = None
    c3: float = 0.0
    c2: float = 0.0
    c1: float = 0.0
    c0: float = 0.0

    def model(self) -> ReactionModel:
        if self.kind == "cubic":
            return ReactionModel.cubic_custom(self.c3, self.c2, self.c1, self.c0)
        return ReactionModel(kind=self.kind, theta=self.theta, a=self.a)

    @model_validator(mode="after")
    def _check_model(self) -> "ReactionSection":
        try:
            self.model()
        except ValidationError as e:
            raise ValueError(e.errors()[0]["msg"].removeprefix("Value error, ")) from None
        return self


class ConstraintSection(_Section):
    mass: float = Field(..., gt=0)


class InitialSection(_Section):
    shape: Literal["block", "ball", "stripe", "constant", "file"] = "block"
    center: list[float] | None = None
    path: str | None = None

    @field_validator("center", mode="before")
    @classmethod
    def _split_center(cls, v):
        return _split_list(v)

    @model_validator(mode="after")
    def _check_path(self) -> "InitialSection":
        if self.shape == "file" and not self.path:
            raise ValueError("shape = file requires path")
        return self


class OptimizerSection(_Section):
    method: Literal["fixed_point", "annealing"] = "fixed_point"
    max_iter: int = Field(100, ge=1)
    tol: float = Field(1e-6, gt=0)
    patience: int = Field(3, ge=1)
    eps_flat: float = Field(1e-4, ge=0)
    root_rule: RootRule = "concave"
    max_halvings: int = Field(8, ge=0)
    seed: int | None = None
    initial_temp: float | None = Field(None, ge=0)
    cooling: float = Field(0.95, gt=0, lt=1)
    moves_per_temp: int = Field(50, ge=1)
    move_mass: float | None = Field(None, gt=0)
    max_evaluations: int = Field(2000, ge=1)


class TwoscaleSection(_Section):
    a: float = math.pi / 4
    b: float = 3 * math.pi / 4
    k_list: list[int] = [4, 8, 16, 32]
    background_mass: float | None = Field(None, gt=0, description="배경 블록 질량, 없으면 constraint.mass")

    @field_validator("k_list", mode="before")
    @classmethod
    def _split_k(cls, v):
        return _split_list(v)


class ChecksSection(_Section):
    trials: int = Field(200, ge=1)
    profiles: int = Field(20, ge=1, description="포물형 비교 검사의 무작위 초기값 수")
    t_samples: int = Field(5, ge=2)
    r_samples: int = Field(5, ge=1)
    directions: int = Field(20, ge=1)
    epsilons: list[float] = [1e-2, 1e-3, 1e-4, 1e-5]

    @field_validator("epsilons", mode="before")
    @classmethod
    def _split_eps(cls, v):
        return _split_list(v)


class OutputSection(_Section):
    dir: str | None = None
    snapshot_stride: int = Field(0, ge=0, description="0 이면 궤적 스냅샷을 쓰지 않는다")
    timings: bool = True


class ExperimentConfig(_Section):
    domain: DomainSection
    time: TimeSection
    reaction: ReactionSection
    constraint: ConstraintSection
    initial: InitialSection = InitialSection()
    optimizer: OptimizerSection = OptimizerSection()
    twoscale: TwoscaleSection = TwoscaleSection()
    checks: ChecksSection = ChecksSection()
    output: OutputSection = OutputSection()

    def grid(self) -> Grid:
        return self.domain.grid()

    def time_config(self) -> TimeConfig:
        return self.time.time_config()

    def reaction_model(self) -> ReactionModel:
        return self.reaction.model()

    def optimizer_options(self) -> OptimizerOptions:
        opt = self.optimizer
        return OptimizerOptions(
            max_iter=opt.max_iter,
            tol=opt.tol,
            patience=opt.patience,
            eps_flat=opt.eps_flat,
            root_rule=opt.root_rule,
            max_halvings=opt.max_halvings,
            timings=self.output.timings
        )

    def anneal_config(self) -> AnnealConfig:
        opt = self.optimizer
        return AnnealConfig(
            initial_temp=opt.initial_temp,
            cooling=opt.cooling,
            moves_per_temp=opt.moves_per_temp,
            move_mass=opt.move_mass,
            seed=opt.seed,
            max_evaluations=opt.max_evaluations,
            timings=self.output.timings
        )


SECTION_ORDER = tuple(ExperimentConfig.model_fields)
REQUIRED_SECTIONS = ("domain", "time", "reaction", "constraint")
