"""
描述统计：四分位数、IQR 清洗、Tukey 箱线图
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple, Union

import numpy as np

from ..core.exceptions import InsufficientDataError
from ..models.analysis_models import BoxplotStats, QuartileSummary
from ..models.measurement_models import MeasurementRecord

MIN_QUARTILE_SAMPLES = 4
DEFAULT_METRICS = ("joules", "runtime_s")


def quartiles(values: Sequence[float]) -> QuartileSummary:
    """
    四分位数（线性插值，0 起始位置 0.25(n−1) 与 0.75(n−1)）

    Raises:
        InsufficientDataError: n < 4
    """
    data = np.asarray(values, dtype=float)
    if data.size < MIN_QUARTILE_SAMPLES:
        raise InsufficientDataError(
            f"quartiles need at least {MIN_QUARTILE_SAMPLES} values, got {data.size}",
            details={"n": int(data.size)},
        )
    q1, q3 = np.quantile(data, [0.25, 0.75], method="linear")
    return QuartileSummary.from_quartiles(float(q1), float(q3))


def record_key(name: str) -> Callable[[MeasurementRecord], str]:
    """分组键：config_id 或某个维度名"""
    if name == "config_id":
        return lambda record: record.config_id
    return lambda record: record.assignments[name]


@dataclass
class IqrFilterResult:
    """IQR 清洗结果"""
    kept: List[MeasurementRecord]
    removed: List[MeasurementRecord]
    fences: Dict[str, Dict[str, QuartileSummary]] = field(default_factory=dict)


def iqr_filter(
    records: Sequence[MeasurementRecord],
    metrics: Sequence[str] = DEFAULT_METRICS,
    key: Union[str, Callable[[MeasurementRecord], str]] = "config_id",
) -> IqrFilterResult:
    """
    按组、按指标的单遍 IQR 清洗

    栅栏在原始数据上计算；任一指标落在栅栏外的记录被整体移除，不再重算栅栏

    Args:
        records: 测量记录
        metrics: 参与清洗的指标
        key: 分组键名或函数

    Returns:
        IqrFilterResult（保持输入顺序）

    Raises:
        InsufficientDataError: 某组少于 4 条记录
    """
    key_of = record_key(key) if isinstance(key, str) else key

    groups: Dict[str, List[MeasurementRecord]] = {}
    for record in records:
        groups.setdefault(key_of(record), []).append(record)

    fences: Dict[str, Dict[str, QuartileSummary]] = {}
    for label, members in groups.items():
        if len(members) < MIN_QUARTILE_SAMPLES:
            raise InsufficientDataError(
                f"group {label!r} has {len(members)} records; IQR cleaning needs {MIN_QUARTILE_SAMPLES}",
                details={"group": label, "n": len(members)},
            )
        fences[label] = {
            metric: quartiles([r.metric(metric) for r in members]) for metric in metrics
        }

    kept, removed = [], []
    for record in records:
        group_fences = fences[key_of(record)]
        if all(group_fences[m].contains(record.metric(m)) for m in metrics):
            kept.append(record)
        else:
            removed.append(record)
    return IqrFilterResult(kept=kept, removed=removed, fences=fences)


def tukey_boxplot(label: str, values: Sequence[float]) -> BoxplotStats:
    """Tukey 箱线图：须为栅栏内最远的数据点"""
    data = np.sort(np.asarray(values, dtype=float))
    summary = quartiles(data)
    inside = data[(data >= summary.lower_fence) & (data <= summary.upper_fence)]
    return BoxplotStats(
        label=label,
        median=float(np.median(data)),
        q1=summary.q1,
        q3=summary.q3,
        whisker_low=float(min(inside.min(), summary.q1)),
        whisker_high=float(max(inside.max(), summary.q3)),
        n=int(data.size),
    )


def split_metric(records: Sequence[MeasurementRecord], metric: str, key: str) -> Tuple[List[str], Dict[str, List[float]]]:
    """按键分组取指标值；标签按首次出现顺序"""
    key_of = record_key(key)
    labels: List[str] = []
    values: Dict[str, List[float]] = {}
    for record in records:
        label = key_of(record)
        if label not in values:
            labels.append(label)
            values[label] = []
        values[label].append(record.metric(metric))
    return labels, values
