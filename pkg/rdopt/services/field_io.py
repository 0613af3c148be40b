"""필드 덤프 형식

1D: `# grid1d n xmin xmax boundary` 헤더 뒤에 한 줄마다 `x value`.
2D: `# nx ny xmin xmax ymin ymax` 헤더 뒤에 ny 줄, 줄마다 nx 개 값.
모든 실수는 %.17g 로 기록해 다시 읽으면 비트 단위로 같다.
"""

from pathlib import Path
import numpy as np
import pandas as pd
import structlog
from rdopt.errors import FieldFormatError, PersistenceError
from rdopt.models.grid import Grid1D, Grid2D, ScalarField, Trajectory

logger = structlog.get_logger()

FLOAT_FORMAT = "%.17g"


def _header(field: ScalarField) -> str:
    g = field.grid
    if isinstance(g, Grid2D):
        return f"{g.nx} {g.ny} {g.xmin:.17g} {g.xmax:.17g} {g.ymin:.17g} {g.ymax:.17g}"
    return f"grid1d {g.n} {g.xmin:.17g} {g.xmax:.17g} {g.boundary}"


def dump_field(path: str | Path, field: ScalarField, comment: str | None = None) -> None:
    header = _header(field)
    if comment:
        header = f"{header}\n{comment}"
    if isinstance(field.grid, Grid2D):
        table = field.values
    else:
        table = np.column_stack([field.grid.nodes(), field.values])
    try:
        np.savetxt(path, table, fmt=FLOAT_FORMAT, header=header, comments="# ", encoding="utf-8")
    except OSError as e:
        raise PersistenceError(f"cannot write field to {path}: {e}") from e


def _parse_floats(tokens: list[str], lineno: int) -> list[float]:
    try:
        return [float(t) for t in tokens]
    except ValueError as e:
        raise FieldFormatError(f"not a number: {e}", line=lineno) from e


def _parse_header(tokens: list[str], lineno: int) -> Grid1D | Grid2D:
    try:
        if tokens[0] == "grid1d":
            if len(tokens) not in (4, 5):
                raise FieldFormatError("1D header needs: grid1d n xmin xmax [boundary]", line=lineno)
            boundary = tokens[4] if len(tokens) == 5 else "neumann"
            return Grid1D(xmin=float(tokens[2]), xmax=float(tokens[3]), n=int(tokens[1]), boundary=boundary)
        if len(tokens) != 6:
            raise FieldFormatError("2D header needs: nx ny xmin xmax ymin ymax", line=lineno)
        nx, ny = int(tokens[0]), int(tokens[1])
        xmin, xmax, ymin, ymax = (float(t) for t in tokens[2:])
        return Grid2D(xmin=xmin, xmax=xmax, ymin=ymin, ymax=ymax, nx=nx, ny=ny)
    except FieldFormatError:
        raise
    except ValueError as e:
        raise FieldFormatError(f"invalid header: {e}", line=lineno) from e


def _infer_grid(x: np.ndarray, lineno: int) -> Grid1D:
    """헤더가 없는 1D 파일: x 열이 균일 간격이어야 한다"""
    if x.size < 3:
        raise FieldFormatError("headerless field needs at least 3 rows", line=lineno)
    steps = np.diff(x)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * abs(float(steps.mean())):
        raise FieldFormatError("x column is not a uniform increasing grid", line=lineno)
    return Grid1D(xmin=float(x[0]), xmax=float(x[-1]), n=x.size)


def load_field(path: str | Path) -> ScalarField:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise PersistenceError(f"cannot read field from {path}: {e}") from e

    grid = None
    rows: list[list[float]] = []
    last_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            tokens = line[1:].split()
            # 데이터 전의 첫 주석 줄만 헤더로 본다
            if grid is None and not rows and tokens and (tokens[0] == "grid1d" or len(tokens) == 6):
                grid = _parse_header(tokens, lineno)
            continue
        rows.append(_parse_floats(line.split(), lineno))
        last_line = lineno

    if isinstance(grid, Grid2D):
        if len(rows) != grid.ny or any(len(r) != grid.nx for r in rows):
            count = sum(len(r) for r in rows)
            raise FieldFormatError(
                f"header declares {grid.nx}x{grid.ny} values, file holds {count}", line=last_line or 1
            )
        return ScalarField(grid=grid, values=np.array(rows))

    if any(len(r) != 2 for r in rows):
        bad = next(i for i, r in enumerate(rows) if len(r) != 2)
        raise FieldFormatError(f"1D rows need 'x value', row {bad + 1} has {len(rows[bad])} entries", line=last_line or 1)
    table = np.array(rows).reshape(-1, 2)
    if grid is None:
        grid = _infer_grid(table[:, 0], last_line or 1)
    elif table.shape[0] != grid.n:
        raise FieldFormatError(f"header declares {grid.n} nodes, file holds {table.shape[0]}", line=last_line or 1)
    return ScalarField(grid=grid, values=table[:, 1])


def dump_trajectory(directory: str | Path, traj: Trajectory, stride: int = 1, prefix: str = "u") -> list[Path]:
    """stride 간격의 스냅샷마다 필드 파일 하나 (마지막 레벨은 항상 포함)"""
    if stride < 1:
        raise ValueError("stride must be positive")
    out_dir = Path(directory)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise PersistenceError(f"cannot create {out_dir}: {e}") from e

    indices = list(range(0, traj.n_levels, stride))
    if indices[-1] != traj.n_levels - 1:
        indices.append(traj.n_levels - 1)

    paths = []
    for idx in indices:
        path = out_dir / f"{prefix}_{idx:06d}.dat"
        dump_field(path, traj.field(idx), comment=f"t {traj.times[idx]:.17g}")
        paths.append(path)

    logger.debug("trajectory_dumped", directory=str(out_dir), snapshots=len(paths))
    return paths


def write_table(path: str | Path, rows: list[dict]) -> Path:
    """CSV 표 (pandas, 왕복 가능한 %.17g 형식)"""
    path = Path(path)
    try:
        pd.DataFrame(rows).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    except OSError as e:
        raise PersistenceError(f"cannot write table to {path}: {e}") from e
    return path
