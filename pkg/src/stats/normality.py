"""
Shapiro-Wilk 正态性检验（Royston AS R94 近似）

n = 3 使用精确系数与精确 p 值；4 ≤ n ≤ 11 与 n ≥ 12 各用一组多项式近似
"""

import math
from typing import Sequence

import numpy as np

from ..core.exceptions import DegenerateDataError, InsufficientDataError, StatisticsError
from ..models.analysis_models import NormalityResult
from .distributions import normal_ppf, normal_sf

MIN_N = 3
MAX_N = 5000
SMALL = 1e-19

# 多项式系数（np.polyval 的降幂顺序）
C1 = [-2.706056, 4.434685, -2.07119, -0.147981, 0.221157, 0.0]
C2 = [-3.582633, 5.682633, -1.752461, -0.293762, 0.042981, 0.0]
C3 = [-0.0006714, 0.025054, -0.39978, 0.544]
C4 = [-0.0020322, 0.062767, -0.77857, 1.3822]
C5 = [0.0038915, -0.083751, -0.31082, -1.5861]
C6 = [0.0030302, -0.082676, -0.4803]
G = [0.459, -2.273]

PI6 = 1.909859
STQR = 1.047198


def shapiro_coefficients(n: int) -> np.ndarray:
    """上半部分系数 a_1..a_{n/2}（全部为正，和平方为 1/2）"""
    half = n // 2
    if n == 3:
        return np.array([math.sqrt(0.5)])

    m = np.array([normal_ppf((i - 0.375) / (n + 0.25)) for i in range(1, half + 1)])
    summ2 = 2.0 * float(np.sum(m * m))
    ssumm2 = math.sqrt(summ2)
    rsn = 1.0 / math.sqrt(n)
    a1 = float(np.polyval(C1, rsn)) - m[0] / ssumm2

    a = m.copy()
    if n > 5:
        first = 2
        a2 = -m[1] / ssumm2 + float(np.polyval(C2, rsn))
        fac = math.sqrt((summ2 - 2 * m[0] ** 2 - 2 * m[1] ** 2) / (1 - 2 * a1 ** 2 - 2 * a2 ** 2))
        a[1] = a2
    else:
        first = 1
        fac = math.sqrt((summ2 - 2 * m[0] ** 2) / (1 - 2 * a1 ** 2))
    a[0] = a1
    a[first:] = -m[first:] / fac
    return a


def shapiro_wilk(values: Sequence[float]) -> NormalityResult:
    """
    Shapiro-Wilk 检验

    Args:
        values: 样本（3 ≤ n ≤ 5000）

    Returns:
        NormalityResult(W, p, n)

    Raises:
        InsufficientDataError: n < 3
        StatisticsError: n > 5000
        DegenerateDataError: 零方差
    """
    x = np.sort(np.asarray(values, dtype=float))
    n = int(x.size)
    if n < MIN_N:
        raise InsufficientDataError(f"Shapiro-Wilk needs at least {MIN_N} values, got {n}", details={"n": n})
    if n > MAX_N:
        raise StatisticsError(f"Shapiro-Wilk approximation is valid up to n={MAX_N}, got {n}", details={"n": n})
    if x[-1] - x[0] < SMALL * max(1.0, abs(x[-1])):
        raise DegenerateDataError("Shapiro-Wilk is undefined for a zero-variance sample", details={"n": n})

    a = shapiro_coefficients(n)
    half = a.size
    numerator = float(np.dot(a, x[::-1][:half] - x[:half])) ** 2
    centered = x - x.mean()
    w = min(1.0, numerator / float(np.dot(centered, centered)))

    if n == 3:
        p = PI6 * (math.asin(math.sqrt(w)) - STQR)
        return NormalityResult(w_statistic=w, p_value=min(1.0, max(0.0, p)), n=n)

    w1 = 1.0 - w
    if w1 <= 0:
        return NormalityResult(w_statistic=w, p_value=1.0, n=n)

    y = math.log(w1)
    if n <= 11:
        gamma = float(np.polyval(G, n))
        if y >= gamma:
            return NormalityResult(w_statistic=w, p_value=SMALL, n=n)
        y = -math.log(gamma - y)
        m = float(np.polyval(C3, n))
        s = math.exp(float(np.polyval(C4, n)))
    else:
        ln_n = math.log(n)
        m = float(np.polyval(C5, ln_n))
        s = math.exp(float(np.polyval(C6, ln_n)))

    p = normal_sf((y - m) / s)
    return NormalityResult(w_statistic=w, p_value=min(1.0, max(0.0, p)), n=n)
