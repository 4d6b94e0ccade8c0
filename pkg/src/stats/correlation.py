"""
Pearson 相关
"""

import math
from typing import Sequence

import numpy as np

from ..core.exceptions import DegenerateDataError, InsufficientDataError, StatisticsError
from ..models.analysis_models import CorrelationResult
from .distributions import student_t_two_sided


def pearson(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """
    Pearson 相关系数与双侧 p 值（t = r·sqrt((n−2)/(1−r²))，自由度 n−2）

    Raises:
        StatisticsError: 长度不一致
        InsufficientDataError: n < 3
        DegenerateDataError: 常数输入
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise StatisticsError("pearson needs equal-length inputs", details={"x": int(x.size), "y": int(y.size)})
    n = int(x.size)
    if n < 3:
        raise InsufficientDataError("pearson needs at least three pairs", details={"n": n})

    xm = x - x.mean()
    ym = y - y.mean()
    norm_x = float(np.linalg.norm(xm))
    norm_y = float(np.linalg.norm(ym))
    if norm_x == 0 or norm_y == 0:
        raise DegenerateDataError("pearson is undefined for constant input")

    r = float(np.dot(xm / norm_x, ym / norm_y))
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return CorrelationResult(r=r, p_value=0.0, n=n)

    df = n - 2
    t = r * math.sqrt(df / (1.0 - r * r))
    return CorrelationResult(r=r, p_value=student_t_two_sided(t, df), n=n)
