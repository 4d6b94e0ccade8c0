"""
wattbench 命令行入口
"""

import argparse
import sys
from typing import List, Optional, Sequence, Tuple

import structlog

from ..config.settings import get_settings
from ..core.exceptions import ApplicationException, ErrorHandler, ExitCode
from ..core.logging import configure_logging
from ..reports.exporter import SUPPORTED_FORMATS
from . import commands

logger = structlog.get_logger(__name__)


def fix_assignment(text: str) -> Tuple[str, str]:
    """--fix dim=value"""
    name, sep, value = text.partition("=")
    if not sep or not name or not value:
        raise argparse.ArgumentTypeError(f"expected dim=value, got {text!r}")
    return name.strip(), value.strip()


def format_list(text: str) -> List[str]:
    """--formats json,csv,svg"""
    formats = [part.strip() for part in text.split(",") if part.strip()]
    unknown = [f for f in formats if f not in SUPPORTED_FORMATS]
    if not formats or unknown:
        raise argparse.ArgumentTypeError(
            f"formats must be a comma-separated subset of {','.join(SUPPORTED_FORMATS)}"
        )
    return formats


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def probability(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("must lie in (0, 1)")
    return value


def duty(text: str) -> float:
    value = float(text)
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError("must lie in (0, 1]")
    return value


def non_negative(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def _add_plan_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--experiment", required=True, help="experiment TOML file")
    parser.add_argument("--iterations", type=positive_int, help="override [run] iterations")
    parser.add_argument("--ordering", choices=["blocked", "round-robin"], help="override [run] ordering")


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--resume", action="store_true", help="skip runs already in the output CSV")
    parser.add_argument("--include-startup", action="store_true", help="sample application startup too")
    parser.add_argument("--seed", type=int, help="override the simulated source seed")
    parser.add_argument("--metrics-port", type=int, help="expose Prometheus metrics on this port")


def _add_analysis_options(parser: argparse.ArgumentParser, default_formats: str, require_group: bool = True) -> None:
    parser.add_argument("--group-by", required=require_group, default=None if require_group else "config_id",
                        help="dimension that varies between groups")
    parser.add_argument("--fix", type=fix_assignment, action="append", metavar="DIM=VALUE",
                        help="hold a dimension fixed (repeatable)")
    parser.add_argument("--formats", type=format_list, default=format_list(default_formats),
                        help="comma-separated subset of json,csv,svg")
    parser.add_argument("--alpha", type=probability, help="significance level")
    parser.add_argument("--metric", choices=["joules", "runtime_s"], help="analysed metric")
    parser.add_argument("--carbon-intensity", type=non_negative, help="grid intensity in g CO2 per kWh")
    parser.add_argument("--duty-cycle", type=duty, help="fraction of the day under load")
    parser.add_argument("--baseline", help="group label used as footprint baseline")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wattbench",
        description="Energy benchmarks across software stack versions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="list configurations and run-plan size")
    _add_plan_options(plan)
    plan.add_argument("--json", action="store_true", help="emit configurations as JSON lines")
    plan.set_defaults(handler=commands.cmd_plan)

    run = sub.add_parser("run", help="execute the run plan")
    _add_plan_options(run)
    _add_run_options(run)
    run.add_argument("--out", default=commands.MEASUREMENTS_FILE, help="measurement CSV path")
    run.set_defaults(handler=commands.cmd_run)

    for name, formats, help_text in (
        ("analyze", "json", "analyse a measurement CSV"),
        ("report", ",".join(SUPPORTED_FORMATS), "analyse and export every report format"),
    ):
        command = sub.add_parser(name, help=help_text)
        command.add_argument("csv", help="measurement CSV")
        command.add_argument("--experiment", help="experiment TOML (orders group labels)")
        command.add_argument("--out", default=commands.REPORT_DIR, help="report directory")
        _add_analysis_options(command, formats)
        command.set_defaults(handler=commands.cmd_analyze)

    simulate = sub.add_parser("simulate", help="end-to-end synthetic experiment")
    _add_plan_options(simulate)
    _add_run_options(simulate)
    simulate.add_argument("--profile", help="[simulation.profiles.<name>] to apply")
    simulate.add_argument("--out", default="simulation", help="output directory")
    _add_analysis_options(simulate, ",".join(SUPPORTED_FORMATS), require_group=False)
    simulate.set_defaults(handler=commands.cmd_simulate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    命令行主函数

    Returns:
        退出码：0 成功，1 有运行失败，2 配置错误，3 能耗源不可用，4 分析不可行
    """
    settings = get_settings()
    configure_logging(settings.app.log, json_output=settings.app.log_json)
    if not settings.validate():
        for error in settings.errors:
            commands.print_error(error)
        return ExitCode.CONFIG_ERROR
    logger.debug("cli.settings", **settings.as_dict())

    args = build_parser().parse_args(argv)
    try:
        return int(args.handler(args))
    except ApplicationException as e:
        response = ErrorHandler().handle_error(e, {"operation": args.command})
        commands.print_error(e.message)
        return response["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
