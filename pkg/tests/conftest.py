import math
from pathlib import Path
import numpy as np
import pytest
from rdopt.config import get_settings
from rdopt.models.grid import Grid1D, ScalarField, TimeConfig
from rdopt.models.reaction import ReactionModel

REPO_ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = REPO_ROOT / "configs"


@pytest.fixture(autouse=True)
def _fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def interval_grid() -> Grid1D:
    """(0, π), 101 노드"""
    return Grid1D(xmin=0.0, xmax=math.pi, n=101)


@pytest.fixture
def bistable() -> ReactionModel:
    return ReactionModel.bistable(0.25)


@pytest.fixture
def smooth_u0(interval_grid) -> ScalarField:
    x = interval_grid.nodes()
    return ScalarField(grid=interval_grid, values=0.5 + 0.3 * np.cos(x))


@pytest.fixture
def short_time() -> TimeConfig:
    return TimeConfig(T=1.0, nt=1000)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
