from .grid import Grid, Grid1D, Grid2D, ScalarField, TimeConfig, TorusField, Trajectory
from .reaction import FPrimeRoot, ReactionModel
from .sensitivity import AdjointTrajectory, GradientCheckRow, GradientReport
from .optimizer import (
    AnnealConfig,
    BathtubSplit,
    IterationRecord,
    OptimizeResult,
    OptimizerOptions,
    OptimizerState,
    Prop1Report,
)
from .rearrange import DistributionFunction
from .twoscale import CutoffProfile, RemainderSweep
from .experiment import ExperimentConfig

__all__ = [
    "Grid",
    "Grid1D",
    "Grid2D",
    "ScalarField",
    "TimeConfig",
    "TorusField",
    "Trajectory",
    "FPrimeRoot",
    "ReactionModel",
    "AdjointTrajectory",
    "GradientCheckRow",
    "GradientReport",
    "AnnealConfig",
    "BathtubSplit",
    "IterationRecord",
    "OptimizeResult",
    "OptimizerOptions",
    "OptimizerState",
    "Prop1Report",
    "DistributionFunction",
    "CutoffProfile",
    "RemainderSweep",
    "ExperimentConfig",
]
