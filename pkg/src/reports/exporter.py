"""
报告导出器
支持将 AnalysisReport 导出为 JSON / CSV / SVG
"""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

import pandas as pd
import structlog

from ..core.exceptions import ReportExportError
from ..models.analysis_models import AnalysisReport
from ..stats.effect_size import magnitude_label
from .svg_charts import boxplot_svg, heatmap_svg

logger = structlog.get_logger(__name__)

SUPPORTED_FORMATS = ("json", "csv", "svg")

PAIRWISE_COLUMNS = [
    "pair", "label_a", "label_b", "statistic", "raw_p", "adjusted_p",
    "cliffs_delta", "magnitude", "significant",
]
BOXPLOT_COLUMNS = ["label", "n", "whisker_low", "q1", "median", "q3", "whisker_high"]
CORRELATION_COLUMNS = ["label", "r", "p_value", "n"]
FOOTPRINT_COLUMNS = [
    "label", "joules_per_run", "runtime_s", "duty_cycle", "carbon_intensity_g_per_kwh",
    "runs_per_day", "energy_wh_per_day", "energy_kwh_per_year", "co2_kg_per_year",
]


class BaseExporter(ABC):
    """
    报告导出器基类

    所有导出器都应继承此类并实现 export 方法
    """

    extension: str = ""

    def __init__(self, output_dir: Union[str, Path] = "reports"):
        """
        初始化导出器

        Args:
            output_dir: 输出目录

        Raises:
            ReportExportError: 目录无法创建
        """
        self.output_dir = Path(output_dir)
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ReportExportError(f"cannot create output directory: {e}", path=self.output_dir, original_error=e)

    @abstractmethod
    def export(self, report: AnalysisReport) -> List[Path]:
        """
        导出报告

        Args:
            report: 报告对象

        Returns:
            写出的文件路径
        """
        pass

    def _path(self, report: AnalysisReport, suffix: str) -> Path:
        return self.output_dir / f"{self._sanitize_filename(report.grouping.slug)}_{suffix}.{self.extension}"

    def _sanitize_filename(self, filename: str) -> str:
        """清理文件名中的非法字符"""
        invalid_chars = '<>:"/\\|?*'
        for char in invalid_chars:
            filename = filename.replace(char, '_')
        return filename

    def _write(self, path: Path, content: str) -> Path:
        try:
            path.write_text(content, encoding="utf-8")
        except OSError as e:
            raise ReportExportError(f"cannot write {path}: {e}", path=path, original_error=e)
        return path

    def _write_frame(self, path: Path, frame: pd.DataFrame) -> Path:
        try:
            frame.to_csv(path, index=False, lineterminator="\n")
        except OSError as e:
            raise ReportExportError(f"cannot write {path}: {e}", path=path, original_error=e)
        return path


class JSONExporter(BaseExporter):
    """JSON 导出器（完整报告，带 schema 版本号）"""

    extension = "json"

    def export(self, report: AnalysisReport) -> List[Path]:
        content = report.model_dump_json(by_alias=True, indent=2)
        return [self._write(self._path(report, "report"), content + "\n")]


class CSVExporter(BaseExporter):
    """CSV 导出器：两两比较、箱线图、相关、足迹各一张表"""

    extension = "csv"

    def export(self, report: AnalysisReport) -> List[Path]:
        pairwise = pd.DataFrame(
            [
                {
                    "pair": p.pair,
                    "label_a": p.label_a,
                    "label_b": p.label_b,
                    "statistic": p.statistic,
                    "raw_p": p.raw_p,
                    "adjusted_p": p.adjusted_p,
                    "cliffs_delta": p.cliffs_delta,
                    "magnitude": magnitude_label(p.cliffs_delta) if p.cliffs_delta is not None else "",
                    "significant": p.significant,
                }
                for p in report.pairwise
            ],
            columns=PAIRWISE_COLUMNS,
        )
        boxplots = pd.DataFrame([b.model_dump() for b in report.boxplots], columns=BOXPLOT_COLUMNS)
        correlations = pd.DataFrame(
            [
                {"label": label, "r": c.r, "p_value": c.p_value, "n": c.n} if c else {"label": label}
                for label, c in report.correlations.items()
            ],
            columns=CORRELATION_COLUMNS,
        )
        footprints = pd.DataFrame([f.model_dump() for f in report.footprints], columns=FOOTPRINT_COLUMNS)

        return [
            self._write_frame(self._path(report, "pairwise"), pairwise),
            self._write_frame(self._path(report, "boxplots"), boxplots),
            self._write_frame(self._path(report, "correlations"), correlations),
            self._write_frame(self._path(report, "footprints"), footprints),
        ]


class SVGExporter(BaseExporter):
    """SVG 导出器：箱线图与热力图"""

    extension = "svg"

    def export(self, report: AnalysisReport) -> List[Path]:
        slug = report.grouping.slug
        unit = "s" if report.grouping.metric == "runtime_s" else "J"
        return [
            self._write(
                self._path(report, "boxplot"),
                boxplot_svg(report.boxplots, title=f"{report.grouping.metric} {slug}", unit=unit),
            ),
            self._write(
                self._path(report, "heatmap"),
                heatmap_svg(report.heatmap, title=f"Cliff's delta {slug}"),
            ),
        ]


class ReportExporter:
    """
    报告导出器

    统一接口，支持多种格式导出
    """

    def __init__(self, output_dir: Union[str, Path] = "reports"):
        """
        初始化导出器

        Args:
            output_dir: 输出目录
        """
        self.output_dir = Path(output_dir)
        self._exporters = {
            "json": JSONExporter,
            "csv": CSVExporter,
            "svg": SVGExporter,
        }

    def export(
        self,
        report: AnalysisReport,
        formats: Optional[Iterable[str]] = None,
    ) -> Dict[str, List[Path]]:
        """
        导出报告为多种格式

        Args:
            report: 报告对象
            formats: 格式集合 {"json", "csv", "svg"}

        Returns:
            文件清单 {format: [path, ...]}

        Raises:
            ReportExportError: 未知格式或写入失败
        """
        formats = list(formats or ["json"])
        unknown = [fmt for fmt in formats if fmt not in self._exporters]
        if unknown:
            raise ReportExportError(f"unsupported formats: {unknown}")

        manifest: Dict[str, List[Path]] = {}
        for fmt in SUPPORTED_FORMATS:
            if fmt not in formats:
                continue
            paths = self._exporters[fmt](self.output_dir).export(report)
            manifest[fmt] = paths
            for path in paths:
                logger.info("report.exported", format=fmt, path=str(path))
        return manifest


def render(
    report: AnalysisReport,
    formats: Iterable[str],
    out_dir: Union[str, Path],
) -> Dict[str, List[Path]]:
    """导出报告（ReportExporter 的便捷入口）"""
    return ReportExporter(out_dir).export(report, formats)


# 工厂函数
def create_report_exporter(output_dir: Union[str, Path] = "reports") -> ReportExporter:
    """
    创建报告导出器

    Args:
        output_dir: 输出目录

    Returns:
        ReportExporter 实例
    """
    return ReportExporter(output_dir=output_dir)
