"""INI 형식 실험 설정 파서

`[section]` / `key = value` 줄, `#` 주석. 검증 오류는 해당 줄 번호와 함께 보고한다.
"""

import hashlib
import re
from typing import NoReturn
from pathlib import Path
from pydantic import ValidationError
from rdopt.errors import ConfigurationError, PersistenceError
from rdopt.models.experiment import REQUIRED_SECTIONS, SECTION_ORDER, ExperimentConfig
from rdopt.models.grid import Grid1D

SECTION_PATTERN = re.compile(r"^\[\s*([A-Za-z_][A-Za-z0-9_]*)\s*\]$")

LineIndex = dict[tuple[str, ...], int]


def _scan(text: str) -> tuple[dict[str, dict[str, str]], LineIndex]:
    sections: dict[str, dict[str, str]] = {}
    lines: LineIndex = {}
    current = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        match = SECTION_PATTERN.match(line)
        if match:
            current = match.group(1).lower()
            if current not in SECTION_ORDER:
                raise ConfigurationError(f"unknown section [{current}]", line=lineno)
            if current in sections:
                raise ConfigurationError(f"duplicate section [{current}]", line=lineno)
            sections[current] = {}
            lines[(current,)] = lineno
            continue

        if current is None:
            raise ConfigurationError("key outside of any section", line=lineno)
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigurationError(f"expected 'key = value', got {line!r}", line=lineno)
        if key in sections[current]:
            raise ConfigurationError(f"duplicate key '{key}' in [{current}]", line=lineno)
        sections[current][key] = value.strip()
        lines[(current, key)] = lineno

    return sections, lines


def _line_for(lines: LineIndex, loc: tuple[str, ...]) -> int | None:
    return lines.get(loc[:2]) or lines.get(loc[:1])


def _raise_validation(e: ValidationError, lines: LineIndex, prefix: tuple[str, ...] = ()) -> NoReturn:
    err = e.errors()[0]
    loc = prefix + tuple(str(p) for p in err["loc"])
    if err["type"] == "extra_forbidden" and len(loc) >= 2:
        message = f"unknown key '{loc[1]}' in [{loc[0]}]"
    elif err["type"] == "missing" and len(loc) >= 2:
        message = f"missing key '{loc[1]}' in [{loc[0]}]"
    else:
        message = f"{'.'.join(loc)}: {err['msg'].removeprefix('Value error, ')}"
    raise ConfigurationError(message, line=_line_for(lines, loc)) from None


def _check_consistency(cfg: ExperimentConfig, lines: LineIndex) -> None:
    """섹션 사이의 조건: 질량 범위, 초기값 모양과 차원"""
    try:
        grid = cfg.grid()
    except ValidationError as e:
        _raise_validation(e, lines, ("domain",))
    try:
        cfg.time_config()
    except ValidationError as e:
        _raise_validation(e, lines, ("time",))

    mass = cfg.constraint.mass
    if mass >= grid.measure:
        raise ConfigurationError(
            f"mass exceeds |Ω| ({mass:g} >= {grid.measure:g})",
            line=lines.get(("constraint", "mass"))
        )

    shape = cfg.initial.shape
    shape_line = lines.get(("initial", "shape")) or lines.get(("initial",))
    if shape == "block" and not isinstance(grid, Grid1D):
        raise ConfigurationError("shape = block needs a 1D domain", line=shape_line)
    if shape in ("ball", "stripe") and isinstance(grid, Grid1D):
        raise ConfigurationError(f"shape = {shape} needs a 2D domain", line=shape_line)

    center = cfg.initial.center
    if center is not None and len(center) != grid.ndim:
        raise ConfigurationError(
            f"center needs {grid.ndim} coordinate(s), got {len(center)}",
            line=lines.get(("initial", "center"))
        )

    if not cfg.twoscale.a < cfg.twoscale.b:
        raise ConfigurationError("twoscale support needs a < b", line=lines.get(("twoscale", "a")))


def parse_config(text: str) -> ExperimentConfig:
    sections, lines = _scan(text)
    for name in REQUIRED_SECTIONS:
        if name not in sections:
            raise ConfigurationError(f"missing section [{name}]")

    try:
        cfg = ExperimentConfig.model_validate(sections)
    except ValidationError as e:
        _raise_validation(e, lines)

    _check_consistency(cfg, lines)
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise PersistenceError(f"cannot read config {path}: {e}") from e
    return parse_config(text)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ", ".join(_format_value(v) for v in value)
    return str(value)


def dump_config(cfg: ExperimentConfig) -> str:
    parts = []
    for name in SECTION_ORDER:
        parts.append(f"[{name}]")
        for key, value in getattr(cfg, name).model_dump(exclude_none=True).items():
            parts.append(f"{key} = {_format_value(value)}")
        parts.append("")
    return "\n".join(parts)


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(dump_config(cfg).encode("utf-8")).hexdigest()
