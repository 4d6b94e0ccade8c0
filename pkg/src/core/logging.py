"""
日志配置
使用 structlog 输出到 stderr，数据走文件 / stdout
"""

import logging
import sys

import structlog


_configured = False


def configure_logging(level: str = "INFO", json_output: bool = False, force: bool = False) -> None:
    """
    配置 structlog

    Args:
        level: 日志级别 (DEBUG/INFO/WARNING/ERROR)
        json_output: 是否输出 JSON 行
        force: 已配置时是否重新配置
    """
    global _configured
    if _configured and not force:
        return

    numeric_level = logging.getLevelName(level.upper())
    if not isinstance(numeric_level, int):
        numeric_level = logging.INFO

    renderer = (
        structlog.processors.JSONRenderer()
        if json_output
        else structlog.dev.ConsoleRenderer(colors=False)
    )

    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso", utc=True),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(numeric_level),
        # 每次取当前的 sys.stderr
        logger_factory=lambda *args: structlog.PrintLogger(file=sys.stderr),
        cache_logger_on_first_use=False,
    )
    _configured = True
