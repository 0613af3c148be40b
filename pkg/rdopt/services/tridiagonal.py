"""삼중대각 선형계 풀이 (Neumann / periodic / ADI 라인 일괄 풀이)

계수 규약: 행 i 는 lower[i]*x[i-1] + diag[i]*x[i] + upper[i]*x[i+1] = rhs[i].
비주기 계에서는 lower[0], upper[-1] 을 사용하지 않는다.
"""

import numpy as np
from scipy.linalg import solve_banded


def solve_tridiagonal(
    lower: np.ndarray,
    diag: np.ndarray,
    upper: np.ndarray,
    rhs: np.ndarray
) -> np.ndarray:
    """scipy banded 솔버로 하나의 삼중대각 계를 푼다 (rhs 는 (n,) 또는 (n, k))."""
    n = diag.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, rhs, check_finite=False)


def solve_tridiagonal_lines(
    lower: np.ndarray,
    diag: np.ndarray,
    upper: np.ndarray,
    rhs: np.ndarray
) -> np.ndarray:
    """
    Thomas 알고리즘을 axis 0 방향으로, 열마다 독립적으로 적용한다.

    Args:
        lower, diag, upper, rhs: (n, m) 배열. 열마다 대각 성분이 다를 수 있다.

    Returns:
        np.ndarray: (n, m) 해
    """
    n = rhs.shape[0]
    b = diag.copy()
    d = rhs.copy()

    for k in range(1, n):
        w = lower[k] / b[k - 1]
        b[k] = b[k] - w * upper[k - 1]
        d[k] = d[k] - w * d[k - 1]

    x = np.empty_like(d)
    x[-1] = d[-1] / b[-1]
    for k in range(n - 2, -1, -1):
        x[k] = (d[k] - upper[k] * x[k + 1]) / b[k]

    return x


def solve_cyclic(
    lower: np.ndarray,
    diag: np.ndarray,
    upper: np.ndarray,
    rhs: np.ndarray
) -> np.ndarray:
    """
    주기 삼중대각 계 (lower[0] 은 x[n-1], upper[n-1] 은 x[0] 과 결합).
    Sherman-Morrison 보정으로 두 번의 banded 풀이로 환원한다.
    """
    n = diag.shape[0]
    alpha = upper[-1]
    beta = lower[0]
    gamma = -diag[0]

    bb = diag.copy()
    bb[0] = diag[0] - gamma
    bb[-1] = diag[-1] - alpha * beta / gamma

    u = np.zeros(n)
    u[0] = gamma
    u[-1] = alpha

    both = solve_tridiagonal(lower, bb, upper, np.column_stack([rhs, u]))
    x, z = both[:, 0], both[:, 1]

    fact = (x[0] + beta * x[-1] / gamma) / (1.0 + z[0] + beta * z[-1] / gamma)
    return x - fact * z
