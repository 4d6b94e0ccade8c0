"""
Cliff's delta 效应量
"""

from typing import Sequence

import numpy as np

from ..core.exceptions import InsufficientDataError

# 阈值（negligible / small / medium / large）
MAGNITUDE_LEVELS = (0.147, 0.33, 0.474)
MAGNITUDE_LABELS = ("negligible", "small", "medium", "large")


def _validate(a: np.ndarray, b: np.ndarray) -> None:
    if a.size == 0 or b.size == 0:
        raise InsufficientDataError("Cliff's delta needs two non-empty samples")


def cliffs_delta(a: Sequence[float], b: Sequence[float]) -> float:
    """
    δ = (#{x > y} − #{x < y}) / (n_a · n_b)

    排序后二分计数，O((n + m) log(n + m))；δ > 0 表示 a 占优
    """
    a = np.asarray(a, dtype=float)
    b = np.sort(np.asarray(b, dtype=float))
    _validate(a, b)
    greater = np.searchsorted(b, a, side="left").sum()
    less = (b.size - np.searchsorted(b, a, side="right")).sum()
    return float(greater - less) / (a.size * b.size)


def cliffs_delta_bruteforce(a: Sequence[float], b: Sequence[float]) -> float:
    """O(n · m) 逐对比较"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _validate(a, b)
    return float(np.sign(np.subtract.outer(a, b)).sum()) / (a.size * b.size)


def magnitude_label(delta: float) -> str:
    """效应量等级"""
    size = abs(delta)
    for level, label in zip(MAGNITUDE_LEVELS, MAGNITUDE_LABELS):
        if size < level:
            return label
    return MAGNITUDE_LABELS[-1]
