"""
子命令实现：plan / run / analyze / report / simulate

每个命令返回退出码；数据写到文件或 stdout，日志走 stderr
"""

import argparse
import asyncio
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd
import structlog

from ..config.settings import get_settings
from ..core.exceptions import ExitCode, ExperimentConfigError
from ..core.metrics import get_metrics_collector
from ..matrix.enumerator import enumerate_configs, plan_experiment
from ..matrix.experiment_loader import load_experiment
from ..models.analysis_models import AnalysisReport
from ..models.energy_models import EnergySourceKind
from ..models.experiment_models import Experiment
from ..models.measurement_models import PlanSummary
from ..orchestration.benchmark_runner import create_benchmark_runner
from ..orchestration.records import load_records
from ..reports.analysis import analyze
from ..reports.exporter import render

logger = structlog.get_logger(__name__)

MEASUREMENTS_FILE = "measurements.csv"
REPORT_DIR = "report"


def _plural(count: int, word: str) -> str:
    return f"{count} {word}" if count == 1 else f"{count} {word}s"


def _with_overrides(experiment: Experiment, args: argparse.Namespace) -> Experiment:
    if getattr(args, "include_startup", False):
        lifecycle = experiment.lifecycle.model_copy(update={"include_startup": True})
        experiment = experiment.model_copy(update={"lifecycle": lifecycle})
    return experiment


def cmd_plan(args: argparse.Namespace) -> int:
    """列出有效配置与运行计划规模（纯预演，无副作用）"""
    experiment = load_experiment(args.experiment)
    configs = enumerate_configs(experiment)
    plan = plan_experiment(experiment, iterations=args.iterations, ordering=args.ordering)

    if args.json:
        for config in configs:
            print(json.dumps({"config_id": config.id, "assignments": config.assignments}))
        return ExitCode.OK

    frame = pd.DataFrame(
        [{"config_id": c.id, **c.assignments} for c in configs],
        columns=["config_id"] + experiment.dimension_names,
    )
    print(frame.to_string(index=False))
    print(f"{_plural(len(configs), 'configuration')}, {_plural(len(plan), 'run')}")
    return ExitCode.OK


def _execute(experiment: Experiment, args: argparse.Namespace, output_csv: Path, profile: Optional[str] = None) -> PlanSummary:
    settings = get_settings()
    metrics_port = getattr(args, "metrics_port", None) or settings.app.metrics_port
    metrics = get_metrics_collector(
        enabled=settings.app.enable_metrics or metrics_port is not None,
        port=metrics_port,
    )
    runner = create_benchmark_runner(
        experiment,
        settings=settings,
        profile=profile,
        seed=args.seed,
        metrics=metrics,
    )
    plan = plan_experiment(experiment, iterations=args.iterations, ordering=args.ordering)
    logger.info("plan.started", configurations=plan.config_count, runs=len(plan), output=str(output_csv))
    summary = asyncio.run(runner.run_plan(plan, output_csv, resume=args.resume))
    if metrics.enabled:
        logger.info("plan.metrics", **metrics.get_metrics_summary())
    return summary


def cmd_run(args: argparse.Namespace) -> int:
    """执行运行计划并写测量 CSV"""
    experiment = _with_overrides(load_experiment(args.experiment), args)
    summary = _execute(experiment, args, Path(args.out))
    print(f"{summary.ok} ok, {summary.failed} failed, {summary.skipped} skipped -> {summary.output_path}")
    return ExitCode.RUN_FAILURES if summary.failed else ExitCode.OK


def _print_pairwise(report: AnalysisReport) -> None:
    frame = pd.DataFrame(
        [
            {
                "pair": p.pair,
                "raw_p": f"{p.raw_p:.4g}",
                "adjusted_p": f"{p.adjusted_p:.4g}",
                "delta": f"{p.cliffs_delta:+.3f}",
                "significant": "yes" if p.significant else "no",
            }
            for p in report.pairwise
        ]
    )
    omnibus = report.omnibus
    print(f"grouping: {report.grouping.slug}  H={omnibus.h_statistic:.4f}  df={omnibus.df}  p={omnibus.p_value:.4g}")
    print(frame.to_string(index=False))


def _analyze_and_render(
    records_path: Path,
    args: argparse.Namespace,
    out_dir: Path,
    experiment: Optional[Experiment] = None,
) -> Dict[str, List[Path]]:
    records = load_records(records_path)
    if experiment is None and getattr(args, "experiment", None):
        experiment = load_experiment(args.experiment)
    report = analyze(
        records,
        group_by=args.group_by,
        fixed=dict(args.fix or []),
        alpha=args.alpha,
        metric=args.metric,
        dimensions=experiment.dimensions if experiment else None,
        carbon_intensity_g_per_kwh=args.carbon_intensity,
        duty_cycle=args.duty_cycle,
        baseline=args.baseline,
    )
    _print_pairwise(report)
    manifest = render(report, args.formats, out_dir)
    for paths in manifest.values():
        for path in paths:
            print(path)
    return manifest


def cmd_analyze(args: argparse.Namespace) -> int:
    """分析测量 CSV 并导出报告"""
    _analyze_and_render(Path(args.csv), args, Path(args.out))
    return ExitCode.OK


def cmd_simulate(args: argparse.Namespace) -> int:
    """端到端仿真：虚拟运行 + 报告"""
    experiment = _with_overrides(load_experiment(args.experiment), args)
    if experiment.energy.kind != EnergySourceKind.SIMULATED:
        raise ExperimentConfigError(
            "simulate requires [energy] kind = \"simulated\"",
            path=experiment.source_path,
        )
    out_dir = Path(args.out)
    output_csv = out_dir / MEASUREMENTS_FILE
    summary = _execute(experiment, args, output_csv, profile=args.profile)
    print(f"{summary.ok} ok, {summary.failed} failed, {summary.skipped} skipped -> {summary.output_path}")
    _analyze_and_render(output_csv, args, out_dir / REPORT_DIR, experiment=experiment)
    return ExitCode.RUN_FAILURES if summary.failed else ExitCode.OK


def print_error(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)
