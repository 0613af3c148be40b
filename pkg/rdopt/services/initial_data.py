"""초기 데이터 생성: 셀 겹침 비율 래스터화와 질량 사영"""

import math
import numpy as np
from scipy.optimize import brentq
from rdopt.errors import ConstraintError
from rdopt.models.grid import Grid, Grid1D, Grid2D, ScalarField

SUPERSAMPLE = 16


def _cell_edges(grid: Grid1D) -> tuple[np.ndarray, np.ndarray]:
    x = grid.nodes()
    lo = x - 0.5 * grid.dx
    hi = x + 0.5 * grid.dx
    if grid.boundary == "neumann":
        lo = np.maximum(lo, grid.xmin)
        hi = np.minimum(hi, grid.xmax)
    return lo, hi


def interval_fractions(grid: Grid1D, a: float, b: float) -> np.ndarray:
    lo, hi = _cell_edges(grid)
    shifts = (0.0,) if grid.boundary == "neumann" else (-grid.length, 0.0, grid.length)
    overlap = np.zeros(grid.n)
    for s in shifts:
        overlap += np.clip(np.minimum(hi, b + s) - np.maximum(lo, a + s), 0.0, None)
    return np.minimum(overlap / (hi - lo), 1.0)


def rasterize_interval(grid: Grid1D, a: float, b: float) -> ScalarField:
    """구간 (a, b) 의 지시함수. 이산 질량이 |(a,b) ∩ Ω| 와 정확히 같다."""
    if not b > a:
        raise ConstraintError("interval must satisfy b > a")
    return ScalarField(grid=grid, values=interval_fractions(grid, a, b))


def block(grid: Grid1D, m: float, center: float | None = None) -> ScalarField:
    center = 0.5 * (grid.xmin + grid.xmax) if center is None else center
    a, b = center - 0.5 * m, center + 0.5 * m
    if grid.boundary == "neumann" and (a < grid.xmin - 1e-12 or b > grid.xmax + 1e-12):
        raise ConstraintError(f"block of mass {m} centred at {center} leaves the domain")
    return rasterize_interval(grid, a, b)


def rasterize_stripe(grid: Grid2D, m: float, center: float | None = None) -> ScalarField:
    """x 방향 폭 m / (ymax - ymin) 의 세로 띠"""
    center = 0.5 * (grid.xmin + grid.xmax) if center is None else center
    width = m / (grid.ymax - grid.ymin)
    frac = interval_fractions(grid.x_grid, center - 0.5 * width, center + 0.5 * width)
    return ScalarField(grid=grid, values=np.tile(frac, (grid.ny, 1)))


def rasterize_ball(grid: Grid2D, m: float, center: tuple[float, float] | None = None) -> ScalarField:
    """면적 m 인 원판. 셀 부분표본으로 겹침 비율을 구한 뒤 질량을 맞춘다."""
    cx, cy = center if center is not None else (
        0.5 * (grid.xmin + grid.xmax), 0.5 * (grid.ymin + grid.ymax)
    )
    radius = math.sqrt(m / math.pi)

    def sub_points(g: Grid1D) -> np.ndarray:
        lo, hi = _cell_edges(g)
        t = (np.arange(SUPERSAMPLE) + 0.5) / SUPERSAMPLE
        return lo[:, None] + (hi - lo)[:, None] * t[None, :]

    xs = sub_points(grid.x_grid)
    ys = sub_points(grid.y_grid)
    dx2 = (xs - cx) ** 2
    dy2 = (ys - cy) ** 2
    inside = dy2[:, None, :, None] + dx2[None, :, None, :] <= radius ** 2
    frac = inside.mean(axis=(2, 3))
    return project_to_mass(ScalarField(grid=grid, values=frac), m)


def constant_profile(grid: Grid, m: float) -> ScalarField:
    return ScalarField.constant(grid, m / grid.measure)


def check_mass(grid: Grid, m: float) -> None:
    if not 0.0 < m < grid.measure:
        raise ConstraintError(f"mass {m} must lie in (0, |Ω|) = (0, {grid.measure})")


def project_to_mass(field: ScalarField, m: float) -> ScalarField:
    """L2 사영: clip(v + λ, 0, 1) 의 질량이 m 이 되도록 λ 를 이분법으로 찾는다."""
    check_mass(field.grid, m)
    w = field.grid.weights()
    v = field.values

    def excess(lam: float) -> float:
        return float(np.sum(w * np.clip(v + lam, 0.0, 1.0))) - m

    lo = -float(np.max(v)) - 1.0
    hi = 1.0 - float(np.min(v)) + 1.0
    lam = brentq(excess, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
    return field.with_values(np.clip(v + lam, 0.0, 1.0))


def level_set_fill(score: np.ndarray, weights: np.ndarray, m: float) -> np.ndarray:
    """score 가 큰 셀부터 1 로 채우고 경계 셀은 비율로 채운다 (정확히 질량 m)."""
    flat_score = score.ravel()
    flat_w = weights.ravel()
    order = np.argsort(-flat_score, kind="stable")
    out = np.zeros_like(flat_score)
    cum = np.cumsum(flat_w[order])
    k = int(np.searchsorted(cum, m, side="left"))
    k = min(k, len(order) - 1)
    out[order[:k]] = 1.0
    filled = cum[k - 1] if k > 0 else 0.0
    out[order[k]] = min(max((m - filled) / flat_w[order[k]], 0.0), 1.0)
    return out.reshape(score.shape)


def random_smooth(grid: Grid1D, m: float, rng: np.random.Generator, modes: int = 6) -> ScalarField:
    s = (grid.nodes() - grid.xmin) / grid.length
    amplitudes = rng.normal(size=modes) / (1.0 + np.arange(modes))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=modes)
    g = sum(a * np.cos(np.pi * (j + 1) * s + p) for j, (a, p) in enumerate(zip(amplitudes, phases)))
    g = (g - g.min()) / max(g.max() - g.min(), 1e-12)
    return project_to_mass(ScalarField(grid=grid, values=g), m)


def random_bang_bang(grid: Grid1D, m: float, rng: np.random.Generator) -> ScalarField:
    """무작위 매끄러운 점수의 상위 레벨 집합 (0/1 값, 경계 셀 하나만 비율)"""
    score = random_smooth(grid, 0.5 * grid.measure, rng, modes=int(rng.integers(3, 10))).values
    score = score + 1e-9 * rng.uniform(size=grid.n)
    return ScalarField(grid=grid, values=level_set_fill(score, grid.weights(), m))


def random_direction(grid: Grid, rng: np.random.Generator, modes: int = 4) -> ScalarField:
    """가중 평균이 0 인 매끄러운 섭동 방향 (질량을 바꾸지 않는다)"""

    def profile(g: Grid1D) -> np.ndarray:
        s = (g.nodes() - g.xmin) / g.length
        amplitudes = rng.normal(size=modes)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=modes)
        return sum(a * np.cos(np.pi * (j + 1) * s + p) for j, (a, p) in enumerate(zip(amplitudes, phases)))

    if isinstance(grid, Grid2D):
        h = np.outer(profile(grid.y_grid), np.ones(grid.nx)) + np.outer(np.ones(grid.ny), profile(grid.x_grid))
    else:
        h = profile(grid)
    w = grid.weights()
    h = h - float(np.sum(w * h)) / float(np.sum(w))
    return ScalarField(grid=grid, values=h)
