"""
统计分析与报告数据模型
"""

import math
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator


REPORT_SCHEMA_VERSION = 1


class SampleGroup(BaseModel):
    """一组样本（配置 id 或分组键）"""
    label: str
    values: List[float] = Field(..., min_length=1)

    @field_validator("values")
    @classmethod
    def validate_finite(cls, v):
        if not all(math.isfinite(x) for x in v):
            raise ValueError("sample values must be finite")
        return v

    @property
    def n(self) -> int:
        return len(self.values)


class QuartileSummary(BaseModel):
    """四分位数与 1.5·IQR 栅栏"""
    q1: float
    q3: float
    iqr: float
    lower_fence: float
    upper_fence: float

    @classmethod
    def from_quartiles(cls, q1: float, q3: float) -> "QuartileSummary":
        iqr = q3 - q1
        return cls(
            q1=q1,
            q3=q3,
            iqr=iqr,
            lower_fence=q1 - 1.5 * iqr,
            upper_fence=q3 + 1.5 * iqr,
        )

    def contains(self, value: float) -> bool:
        return self.lower_fence <= value <= self.upper_fence


class NormalityResult(BaseModel):
    """Shapiro-Wilk 检验结果"""
    w_statistic: float = Field(..., gt=0, le=1)
    p_value: float = Field(..., ge=0, le=1)
    n: int


class OmnibusResult(BaseModel):
    """Kruskal-Wallis 检验结果"""
    h_statistic: float = Field(..., ge=0, description="经结校正的 H")
    df: int = Field(..., ge=1)
    p_value: float = Field(..., ge=0, le=1)
    n_total: int = Field(..., description="合并样本量 N")


class PairwiseResult(BaseModel):
    """两两比较结果"""
    label_a: str
    label_b: str
    statistic: float = Field(default=0.0, description="Conover t 统计量")
    raw_p: float = Field(..., ge=0, le=1)
    adjusted_p: Optional[float] = Field(None, ge=0, le=1)
    cliffs_delta: Optional[float] = Field(None, ge=-1, le=1)
    significant: bool = False

    @model_validator(mode="after")
    def validate_adjustment(self):
        if self.adjusted_p is not None and self.adjusted_p < self.raw_p:
            raise ValueError("adjusted_p must not be below raw_p")
        return self

    @property
    def pair(self) -> str:
        return f"{self.label_a} vs {self.label_b}"


class CorrelationResult(BaseModel):
    """Pearson 相关结果"""
    r: float = Field(..., ge=-1, le=1)
    p_value: float = Field(..., ge=0, le=1)
    n: int


class BoxplotStats(BaseModel):
    """Tukey 箱线图统计"""
    label: str
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    n: int


class HeatmapCell(BaseModel):
    """热力图单元"""
    delta: float
    adjusted_p: float
    significant: bool

    @property
    def shaded(self) -> bool:
        return not self.significant


class EffectHeatmap(BaseModel):
    """效应量热力图（斜对称）"""
    labels: List[str]
    cells: List[List[Optional[HeatmapCell]]] = Field(..., description="对角线为 None")

    def cell(self, row: str, column: str) -> Optional[HeatmapCell]:
        return self.cells[self.labels.index(row)][self.labels.index(column)]


class FootprintEstimate(BaseModel):
    """碳足迹外推"""
    joules_per_run: float = Field(..., ge=0)
    runtime_s: float = Field(..., gt=0)
    duty_cycle: float = Field(..., gt=0, le=1)
    carbon_intensity_g_per_kwh: float = Field(..., ge=0)
    runs_per_day: float = Field(..., ge=0)
    energy_wh_per_day: float = Field(..., ge=0)
    energy_kwh_per_year: float = Field(..., ge=0)
    co2_kg_per_year: float = Field(..., ge=0)
    label: Optional[str] = None


class FootprintComparison(BaseModel):
    """基线与候选配置的年度差异（正值表示候选节省）"""
    baseline: str
    candidate: str
    kwh_per_year_saved: float
    co2_kg_per_year_saved: float
    relative_saving: float


class GroupSummary(BaseModel):
    """清洗前后的组规模及中位数"""
    label: str
    n_total: int
    n_clean: int
    n_removed: int
    median_joules: float
    median_runtime_s: float


class GroupingDescriptor(BaseModel):
    """分组方式：哪个维度变化，哪些维度固定"""
    group_by: str
    fixed: Dict[str, str] = Field(default_factory=dict)
    metric: str = "joules"
    alpha: float = 0.05

    @property
    def slug(self) -> str:
        parts = [f"by-{self.group_by}"]
        parts.extend(f"{k}-{v}" for k, v in self.fixed.items())
        if self.metric != "joules":
            parts.append(self.metric)
        return "_".join(parts).replace("/", "-").replace(" ", "-")


class AnalysisReport(BaseModel):
    """一次分组分析的完整报告"""
    schema_version: int = Field(default=REPORT_SCHEMA_VERSION, alias="schema")
    grouping: GroupingDescriptor
    labels: List[str]
    summary_table: List[GroupSummary]
    normality: Dict[str, Optional[NormalityResult]]
    omnibus: OmnibusResult
    pairwise: List[PairwiseResult]
    heatmap: EffectHeatmap
    boxplots: List[BoxplotStats]
    correlations: Dict[str, Optional[CorrelationResult]]
    footprints: List[FootprintEstimate]
    footprint_comparisons: List[FootprintComparison] = Field(default_factory=list)

    model_config = {"populate_by_name": True}

    @model_validator(mode="after")
    def validate_pairs(self):
        known = set(self.labels)
        for result in self.pairwise:
            if result.label_a not in known or result.label_b not in known:
                raise ValueError(f"pairwise entry {result.pair} references unknown group")
        return self

    @property
    def significant_pairs(self) -> List[PairwiseResult]:
        return [p for p in self.pairwise if p.significant]
