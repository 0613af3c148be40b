import numpy as np
from scipy.optimize import bisect
from rdopt.errors import NumericalError
from rdopt.models.reaction import FPrimeRoot, ReactionModel

CONCAVITY_ZERO_BAND = 1e-12
ROOT_MERGE_TOLERANCE = 1e-9


def evaluate(model: ReactionModel, order: int, v):
    """f, f', f'' 의 정확한 평가 (order = 0, 1, 2)"""
    out = model.derivative(order, v)
    return float(out) if np.ndim(out) == 0 else out


def concavity_sign(model: ReactionModel, v: float) -> int:
    curvature = float(model.d2f(v))
    if abs(curvature) <= CONCAVITY_ZERO_BAND:
        return 0
    return 1 if curvature > 0 else -1


def inflection_points(model: ReactionModel, lo: float, hi: float) -> list[float]:
    """(lo, hi) 안에서 f'' = 0 인 점 (f' 의 단조 구간 경계)"""
    coeffs = model.cubic_coefficients()
    if coeffs is None:
        # |v|^a / a 는 a > 2 일 때 v = 0 에서만 f'' 가 0
        return [0.0] if model.a > 2.0 and lo < 0.0 < hi else []
    c3, c2, _, _ = coeffs
    if c3 == 0.0:
        return []
    v = -c2 / (3.0 * c3)
    return [v] if lo < v < hi else []


def solve_fprime(
    model: ReactionModel,
    target: float,
    lo: float,
    hi: float
) -> list[FPrimeRoot]:
    """
    [lo, hi] 에서 f'(v) = target 의 모든 근.

    f' 의 단조 구간마다 부호 변화로 괄호를 잡고 이분법으로 정밀화한다.
    근이 없으면 빈 리스트를 돌려준다. f' 가 target 과 같은 상수이면 근이 구간 전체라서 NumericalError.
    """
    if not lo < hi:
        raise ValueError("solve_fprime requires lo < hi")
    coeffs = model.cubic_coefficients()
    if coeffs is not None and coeffs[0] == 0.0 and coeffs[1] == 0.0 and coeffs[2] == target:
        raise NumericalError(f"f' is identically {target} on [{lo}, {hi}], every point is a root")

    def residual(v: float) -> float:
        return float(model.df(v)) - target

    breaks = [lo, *inflection_points(model, lo, hi), hi]
    found: list[float] = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        ra, rb = residual(a), residual(b)
        if ra == 0.0:
            found.append(a)
        if rb == 0.0:
            found.append(b)
        if ra * rb < 0.0:
            found.append(bisect(residual, a, b, xtol=1e-15, rtol=8.9e-16, maxiter=200))

    roots: list[float] = []
    for v in sorted(found):
        if not roots or abs(v - roots[-1]) > ROOT_MERGE_TOLERANCE * (1.0 + abs(v)):
            roots.append(v)

    return [FPrimeRoot(value=v, concavity=concavity_sign(model, v)) for v in roots]
