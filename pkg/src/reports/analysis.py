"""
分组分析流水线

ok 记录 → 固定维度过滤 → 按配置 IQR 清洗 → 各组 Shapiro-Wilk → Kruskal-Wallis
→ Conover 两两比较 → Holm 校正 → Cliff's delta → 热力图 / 箱线图 / 相关 / 足迹
"""

import itertools
from typing import Dict, List, Mapping, Optional, Sequence

import pandas as pd
import structlog

from ..config.settings import get_settings
from ..core.exceptions import AnalysisInfeasibleError, StatisticsError
from ..models.analysis_models import (
    AnalysisReport,
    CorrelationResult,
    EffectHeatmap,
    GroupingDescriptor,
    GroupSummary,
    HeatmapCell,
    NormalityResult,
    PairwiseResult,
    SampleGroup,
)
from ..models.experiment_models import Dimension
from ..models.measurement_models import MeasurementRecord
from ..stats.correlation import pearson
from ..stats.descriptive import MIN_QUARTILE_SAMPLES, iqr_filter, record_key, tukey_boxplot
from ..stats.effect_size import cliffs_delta
from ..stats.nonparametric import conover_pairwise, holm_adjust, kruskal_wallis
from ..stats.normality import shapiro_wilk
from .footprint import compare_footprints, extrapolate_footprint

logger = structlog.get_logger(__name__)

METRICS = ("joules", "runtime_s")
ALL_LABEL = "All"


def select_records(
    records: Sequence[MeasurementRecord],
    fixed: Optional[Mapping[str, str]] = None,
) -> List[MeasurementRecord]:
    """ok 记录中满足全部固定取值的子集"""
    fixed = dict(fixed or {})
    return [
        record for record in records
        if record.is_ok and all(record.assignments.get(k) == v for k, v in fixed.items())
    ]


def _ordered_labels(
    present: Sequence[str],
    group_by: str,
    dimensions: Optional[Sequence[Dimension]],
) -> List[str]:
    for dimension in dimensions or ():
        if dimension.name == group_by:
            declared = [v for v in dimension.values if v in present]
            return declared + [v for v in present if v not in declared]
    return list(dict.fromkeys(present))


def heatmap(pairwise: Sequence[PairwiseResult], labels: Sequence[str]) -> EffectHeatmap:
    """
    效应量热力图

    cells[i][j] 为行标签相对列标签的 δ；下三角由斜对称填充，对角线为空

    Raises:
        StatisticsError: 缺少某个无序对
    """
    labels = list(labels)
    index = {label: i for i, label in enumerate(labels)}
    by_pair = {}
    for result in pairwise:
        by_pair[(result.label_a, result.label_b)] = result

    size = len(labels)
    cells: List[List[Optional[HeatmapCell]]] = [[None] * size for _ in range(size)]
    for a, b in itertools.combinations(labels, 2):
        result = by_pair.get((a, b))
        sign = 1.0
        if result is None:
            result = by_pair.get((b, a))
            sign = -1.0
        if result is None or result.cliffs_delta is None:
            raise StatisticsError(f"heatmap is missing pair {a} vs {b}", details={"pair": [a, b]})

        delta = sign * result.cliffs_delta
        p = result.adjusted_p if result.adjusted_p is not None else result.raw_p
        cells[index[a]][index[b]] = HeatmapCell(delta=delta, adjusted_p=p, significant=result.significant)
        cells[index[b]][index[a]] = HeatmapCell(delta=-delta, adjusted_p=p, significant=result.significant)
    return EffectHeatmap(labels=labels, cells=cells)


def _normality(label: str, values: Sequence[float]) -> Optional[NormalityResult]:
    try:
        return shapiro_wilk(values)
    except StatisticsError as e:
        logger.debug("analysis.normality_skipped", group=label, reason=e.message)
        return None


def _correlation(label: str, records: Sequence[MeasurementRecord]) -> Optional[CorrelationResult]:
    try:
        return pearson([r.metric("runtime_s") for r in records], [r.metric("joules") for r in records])
    except StatisticsError as e:
        logger.debug("analysis.correlation_skipped", group=label, reason=e.message)
        return None


def analyze(
    records: Sequence[MeasurementRecord],
    group_by: str,
    fixed: Optional[Mapping[str, str]] = None,
    alpha: Optional[float] = None,
    metric: Optional[str] = None,
    dimensions: Optional[Sequence[Dimension]] = None,
    carbon_intensity_g_per_kwh: Optional[float] = None,
    duty_cycle: Optional[float] = None,
    baseline: Optional[str] = None,
) -> AnalysisReport:
    """
    对一种分组方式执行完整分析

    Args:
        records: 测量记录（failed 记录被忽略）
        group_by: 变化的维度（或 config_id）
        fixed: 固定的维度取值
        alpha: 显著性水平
        metric: joules 或 runtime_s
        dimensions: 维度声明（决定标签顺序；缺省按首次出现）
        carbon_intensity_g_per_kwh: 碳强度
        duty_cycle: 负载占空比
        baseline: 足迹比较的基线标签（缺省为第一个标签）

    Returns:
        AnalysisReport

    Raises:
        AnalysisInfeasibleError: 分组少于 2 个、清洗后某组少于 4 条、分组维度不存在或数据退化
    """
    defaults = get_settings().analysis
    alpha = defaults.alpha if alpha is None else alpha
    metric = metric or defaults.metric
    intensity = defaults.carbon_intensity_g_per_kwh if carbon_intensity_g_per_kwh is None else carbon_intensity_g_per_kwh
    duty_cycle = defaults.duty_cycle if duty_cycle is None else duty_cycle
    fixed = dict(fixed or {})

    if metric not in METRICS:
        raise AnalysisInfeasibleError(f"unknown metric {metric!r}", details={"metrics": list(METRICS)})
    if group_by in fixed:
        raise AnalysisInfeasibleError(f"{group_by!r} cannot be both grouped and fixed")

    selected = select_records(records, fixed)
    if not selected:
        raise AnalysisInfeasibleError("no ok records match the requested grouping", details={"fixed": fixed})
    if group_by != "config_id" and any(group_by not in r.assignments for r in selected):
        raise AnalysisInfeasibleError(f"unknown grouping dimension {group_by!r}")

    try:
        cleaning = iqr_filter(selected, metrics=METRICS, key="config_id")
    except StatisticsError as e:
        raise AnalysisInfeasibleError(e.message, details=e.details)

    key_of = record_key(group_by)
    totals: Dict[str, int] = {}
    for record in selected:
        totals[key_of(record)] = totals.get(key_of(record), 0) + 1
    labels = _ordered_labels(list(totals), group_by, dimensions)
    if len(labels) < 2:
        raise AnalysisInfeasibleError(
            f"grouping by {group_by!r} yields {len(labels)} group(s); at least 2 are required",
            details={"labels": labels},
        )

    frame = pd.DataFrame(
        [{"label": key_of(r), "config_id": r.config_id, "joules": r.joules, "runtime_s": r.runtime_s} for r in cleaning.kept]
    )
    groups: List[SampleGroup] = []
    for label in labels:
        values = frame.loc[frame["label"] == label, metric].tolist() if not frame.empty else []
        if len(values) < MIN_QUARTILE_SAMPLES:
            raise AnalysisInfeasibleError(
                f"group {label!r} has {len(values)} records after cleaning; at least {MIN_QUARTILE_SAMPLES} are required",
                details={"group": label, "n": len(values)},
            )
        groups.append(SampleGroup(label=label, values=values))

    try:
        omnibus = kruskal_wallis(groups)
        pairwise = conover_pairwise(groups, omnibus)
    except StatisticsError as e:
        raise AnalysisInfeasibleError(e.message, details=e.details)

    by_label = {group.label: group.values for group in groups}
    adjusted = holm_adjust([result.raw_p for result in pairwise])
    pairwise = [
        result.model_copy(update={
            "adjusted_p": max(p, result.raw_p),
            "cliffs_delta": cliffs_delta(by_label[result.label_a], by_label[result.label_b]),
            "significant": p < alpha,
        })
        for result, p in zip(pairwise, adjusted)
    ]

    medians = frame.groupby("label")[["joules", "runtime_s"]].median()
    summary_table = [
        GroupSummary(
            label=label,
            n_total=totals[label],
            n_clean=len(by_label[label]),
            n_removed=totals[label] - len(by_label[label]),
            median_joules=float(medians.at[label, "joules"]),
            median_runtime_s=float(medians.at[label, "runtime_s"]),
        )
        for label in labels
    ]

    correlations: Dict[str, Optional[CorrelationResult]] = {ALL_LABEL: _correlation(ALL_LABEL, cleaning.kept)}
    per_config: Dict[str, List[MeasurementRecord]] = {}
    for record in cleaning.kept:
        per_config.setdefault(record.config_id, []).append(record)
    for config_id, members in per_config.items():
        correlations[config_id] = _correlation(config_id, members)

    footprints = [
        extrapolate_footprint(
            row.median_joules,
            row.median_runtime_s,
            duty_cycle=duty_cycle,
            carbon_intensity_g_per_kwh=intensity,
            label=row.label,
        )
        for row in summary_table
    ]
    baseline = baseline or labels[0]
    if baseline not in labels:
        raise AnalysisInfeasibleError(f"unknown baseline {baseline!r}", details={"labels": labels})
    base = footprints[labels.index(baseline)]
    comparisons = [compare_footprints(base, f) for f in footprints if f.label != baseline]

    report = AnalysisReport(
        grouping=GroupingDescriptor(group_by=group_by, fixed=fixed, metric=metric, alpha=alpha),
        labels=labels,
        summary_table=summary_table,
        normality={group.label: _normality(group.label, group.values) for group in groups},
        omnibus=omnibus,
        pairwise=pairwise,
        heatmap=heatmap(pairwise, labels),
        boxplots=[tukey_boxplot(group.label, group.values) for group in groups],
        correlations=correlations,
        footprints=footprints,
        footprint_comparisons=comparisons,
    )
    logger.info(
        "analysis.finished",
        grouping=report.grouping.slug,
        groups=len(labels),
        removed=len(cleaning.removed),
        h=round(omnibus.h_statistic, 4),
        p=omnibus.p_value,
        significant=len(report.significant_pairs),
    )
    return report
