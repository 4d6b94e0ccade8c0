"""
秩检验：Kruskal-Wallis H 检验、Conover 两两比较、Holm 校正
"""

import itertools
import math
from typing import List, Sequence, Union

import numpy as np
from scipy.stats import rankdata

from ..core.exceptions import DegenerateDataError, InsufficientDataError, StatisticsError
from ..models.analysis_models import OmnibusResult, PairwiseResult, SampleGroup
from .distributions import chi2_sf, student_t_two_sided

GroupInput = Union[SampleGroup, Sequence[float]]


def as_groups(groups: Sequence[GroupInput]) -> List[SampleGroup]:
    """把序列统一为 SampleGroup（未命名的组标签为 g0, g1, ...）"""
    result = []
    for index, group in enumerate(groups):
        if isinstance(group, SampleGroup):
            result.append(group)
        else:
            result.append(SampleGroup(label=f"g{index}", values=[float(v) for v in group]))
    return result


def midranks(values: Sequence[float]) -> np.ndarray:
    """平均秩（结取平均）"""
    return rankdata(np.asarray(values, dtype=float), method="average")


def _pooled(groups: List[SampleGroup]):
    pooled = np.concatenate([np.asarray(g.values, dtype=float) for g in groups])
    sizes = np.array([g.n for g in groups])
    ranks = midranks(pooled)
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    rank_sums = np.array([ranks[bounds[i]:bounds[i + 1]].sum() for i in range(len(groups))])
    return pooled, ranks, sizes, rank_sums


def tie_correction(ranks: np.ndarray) -> float:
    """1 − Σ(t³ − t) / (N³ − N)"""
    n = ranks.size
    if n < 2:
        return 1.0
    _, counts = np.unique(ranks, return_counts=True)
    counts = counts.astype(float)
    return 1.0 - float(np.sum(counts ** 3 - counts)) / (n ** 3 - n)


def kruskal_wallis(groups: Sequence[GroupInput]) -> OmnibusResult:
    """
    Kruskal-Wallis H 检验（带结校正）

    Raises:
        InsufficientDataError: 少于 2 组或存在空组
        DegenerateDataError: 所有值都相同
    """
    groups = as_groups(groups)
    if len(groups) < 2:
        raise InsufficientDataError("Kruskal-Wallis needs at least two groups", details={"k": len(groups)})

    _, ranks, sizes, rank_sums = _pooled(groups)
    n = int(sizes.sum())
    correction = tie_correction(ranks)
    if correction <= 0:
        raise DegenerateDataError("Kruskal-Wallis is undefined when all values are equal", details={"n": n})

    h = 12.0 / (n * (n + 1)) * float(np.sum(rank_sums ** 2 / sizes)) - 3.0 * (n + 1)
    h = max(0.0, h / correction)
    df = len(groups) - 1
    return OmnibusResult(h_statistic=h, df=df, p_value=min(1.0, chi2_sf(h, df)), n_total=n)


def conover_pairwise(groups: Sequence[GroupInput], omnibus: OmnibusResult) -> List[PairwiseResult]:
    """
    Conover 两两比较（仅原始 p 值）

    t = (R̄_i − R̄_j) / sqrt(S² · (N − 1 − H)/(N − k) · (1/n_i + 1/n_j))，
    S² 为合并平均秩的样本方差，自由度 N − k

    Raises:
        DegenerateDataError: N = k
    """
    groups = as_groups(groups)
    _, ranks, sizes, rank_sums = _pooled(groups)
    n, k = int(sizes.sum()), len(groups)
    if n != omnibus.n_total or k != omnibus.df + 1:
        raise StatisticsError("omnibus result was computed on different groups")
    if n <= k:
        raise DegenerateDataError("Conover test needs more observations than groups", details={"n": n, "k": k})

    s2 = float(np.var(ranks, ddof=1))
    scale = s2 * (n - 1 - omnibus.h_statistic) / (n - k)
    mean_ranks = rank_sums / sizes
    df = n - k

    results = []
    for i, j in itertools.combinations(range(k), 2):
        diff = float(mean_ranks[i] - mean_ranks[j])
        variance = scale * (1.0 / sizes[i] + 1.0 / sizes[j])
        if diff == 0:
            t = 0.0
        elif variance <= 0:
            t = math.copysign(math.inf, diff)
        else:
            t = diff / math.sqrt(variance)
        results.append(
            PairwiseResult(
                label_a=groups[i].label,
                label_b=groups[j].label,
                statistic=t,
                raw_p=student_t_two_sided(t, df),
            )
        )
    return results


def holm_adjust(p_values: Sequence[float]) -> List[float]:
    """
    Holm 逐步下降校正（保持输入顺序）

    升序排列后 adj_(i) = min(1, max_{j≤i} (m − j + 1)·p_(j))

    Raises:
        StatisticsError: p 值不在 [0, 1]
    """
    p = np.asarray(p_values, dtype=float)
    if p.size == 0:
        return []
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise StatisticsError("p-values must lie in [0, 1]", details={"p_values": p.tolist()})

    m = p.size
    order = np.argsort(p, kind="stable")
    scaled = p[order] * np.arange(m, 0, -1)
    adjusted_sorted = np.minimum(1.0, np.maximum.accumulate(scaled))
    adjusted = np.empty(m)
    adjusted[order] = adjusted_sorted
    return adjusted.tolist()
