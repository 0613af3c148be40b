from pathlib import Path
import pytest
from rdopt.errors import ConfigurationError, PersistenceError
from rdopt.models.grid import Grid1D, Grid2D
from rdopt.services.config_parser import config_hash, dump_config, load_config, parse_config

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

MINIMAL = """
[domain]
xmin = -50
xmax = 50
nx = 512

[time]
T = 25
nt = 2500

[reaction]
kind = bistable
theta = 0.25

[constraint]
mass = 13
"""


def test_interval_config_parses():
    cfg = load_config(CONFIG_DIR / "interval_bistable.ini")
    grid = cfg.grid()
    assert isinstance(grid, Grid1D)
    assert (grid.xmin, grid.xmax, grid.n) == (-50.0, 50.0, 512)
    assert cfg.time.T == 25.0 and cfg.time.nt == 2500
    assert cfg.reaction_model().theta == 0.25
    assert cfg.constraint.mass == 13.0
    assert cfg.optimizer.seed == 7
    assert cfg.output.timings is False


def test_dump_parses_back_to_same_config():
    cfg = load_config(CONFIG_DIR / "interval_bistable.ini")
    again = parse_config(dump_config(cfg))
    assert again == cfg
    assert config_hash(again) == config_hash(cfg)


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.ini")), ids=lambda p: p.stem)
def test_bundled_configs_are_valid(path):
    cfg = load_config(path)
    assert 0.0 < cfg.constraint.mass < cfg.grid().measure


def test_2d_domain_from_dx_max():
    text = MINIMAL.replace("nx = 512", "dx_max = 0.5\nymin = -10\nymax = 10").replace(
        "xmin = -50\nxmax = 50", "xmin = -10\nxmax = 10"
    ).replace("mass = 13", "mass = 18\n\n[initial]\nshape = ball")
    grid = parse_config(text).grid()
    assert isinstance(grid, Grid2D)
    assert grid.nx == 41 and grid.ny == 41


def test_defaults_fill_optional_sections():
    cfg = parse_config(MINIMAL)
    assert cfg.initial.shape == "block"
    assert cfg.optimizer.root_rule == "concave"
    assert cfg.twoscale.k_list == [4, 8, 16, 32]
    assert cfg.checks.epsilons == [1e-2, 1e-3, 1e-4, 1e-5]


def test_empty_text_reports_first_missing_section():
    with pytest.raises(ConfigurationError, match=r"missing section \[domain\]"):
        parse_config("")


def test_mass_larger_than_domain_names_its_line():
    text = MINIMAL.replace("mass = 13", "mass = 200")
    with pytest.raises(ConfigurationError, match="mass exceeds") as excinfo:
        parse_config(text)
    assert excinfo.value.line == text.splitlines().index("mass = 200") + 1


def test_unknown_key_names_its_line():
    text = MINIMAL.replace("theta = 0.25", "theta = 0.25\nspeed = 3")
    with pytest.raises(ConfigurationError, match="unknown key 'speed'") as excinfo:
        parse_config(text)
    assert excinfo.value.line == text.splitlines().index("speed = 3") + 1


def test_missing_key_is_reported():
    with pytest.raises(ConfigurationError, match="missing key 'T' in \\[time\\]"):
        parse_config(MINIMAL.replace("T = 25\n", ""))


def test_out_of_range_value_names_its_line():
    text = MINIMAL.replace("nt = 2500", "nt = 0")
    with pytest.raises(ConfigurationError) as excinfo:
        parse_config(text)
    assert excinfo.value.line == text.splitlines().index("nt = 0") + 1


def test_invalid_reaction_parameter():
    with pytest.raises(ConfigurationError, match="theta"):
        parse_config(MINIMAL.replace("theta = 0.25", "theta = 1.5"))


def test_ball_on_1d_domain_is_rejected():
    with pytest.raises(ConfigurationError, match="2D domain"):
        parse_config(MINIMAL + "\n[initial]\nshape = ball\n")


def test_malformed_line_is_rejected():
    with pytest.raises(ConfigurationError, match="line 2"):
        parse_config("[domain]\nxmin -50\n")


def test_hash_changes_with_values():
    base = parse_config(MINIMAL)
    other = parse_config(MINIMAL.replace("mass = 13", "mass = 14"))
    assert config_hash(base) != config_hash(other)


def test_missing_config_file(tmp_path):
    with pytest.raises(PersistenceError):
        load_config(tmp_path / "absent.ini")
