"""
运行生命周期：shell 命令执行、pid 文件、运行上下文
"""

import asyncio
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional

import psutil
import structlog

from ..core.exceptions import LifecycleCommandError
from ..models.experiment_models import StackConfig
from ..workload.templating import render

logger = structlog.get_logger(__name__)

ENV_PREFIX = "STACK_"


@dataclass(frozen=True)
class RunContext:
    """一次运行尝试的上下文"""
    config: StackConfig
    iteration: int
    entry_index: int = 0
    attempt: int = 0

    def with_attempt(self, attempt: int) -> "RunContext":
        return replace(self, attempt=attempt)


def stack_environment(variables: Mapping[str, object]) -> Dict[str, str]:
    """替换变量导出为环境变量：STACK_<NAME>=value"""
    return {f"{ENV_PREFIX}{name.upper()}": str(value) for name, value in variables.items()}


class CommandRunner:
    """
    平台 shell 命令执行器

    Args:
        timeout_s: 单条命令超时
        cwd: 工作目录（通常为实验文件所在目录）
    """

    def __init__(self, timeout_s: float = 600.0, cwd: Optional[Path] = None):
        self.timeout_s = timeout_s
        self.cwd = cwd

    async def run(self, template: str, variables: Mapping[str, object], env: Mapping[str, str]) -> None:
        """
        执行单条命令模板

        Raises:
            LifecycleCommandError: 非零退出或超时
        """
        command = render(template, variables)
        process = await asyncio.create_subprocess_shell(
            command,
            cwd=str(self.cwd) if self.cwd else None,
            env={**os.environ, **env},
            stdout=asyncio.subprocess.PIPE,
            stderr=asyncio.subprocess.STDOUT,
        )
        try:
            output, _ = await asyncio.wait_for(process.communicate(), timeout=self.timeout_s)
        except asyncio.TimeoutError:
            process.kill()
            await process.wait()
            raise LifecycleCommandError(f"command timed out after {self.timeout_s}s", command=command)

        if process.returncode != 0:
            tail = (output or b"").decode("utf-8", errors="replace").strip().splitlines()[-5:]
            logger.warning("lifecycle.command_failed", command=command, returncode=process.returncode, output=tail)
            raise LifecycleCommandError(
                f"command exited with status {process.returncode}",
                command=command,
                returncode=process.returncode,
            )
        logger.debug("lifecycle.command_ok", command=command)

    async def run_all(self, templates: List[str], variables: Mapping[str, object], env: Mapping[str, str]) -> None:
        """按顺序执行，遇到失败立即停止"""
        for template in templates:
            await self.run(template, variables, env)

    async def run_teardown(self, templates: List[str], variables: Mapping[str, object], env: Mapping[str, str]) -> int:
        """teardown 全部执行，失败只记录日志；返回失败条数"""
        failures = 0
        for template in templates:
            try:
                await self.run(template, variables, env)
            except LifecycleCommandError as e:
                failures += 1
                logger.warning("run.teardown_failed", command=e.command, returncode=e.returncode)
        return failures


class NullCommandRunner(CommandRunner):
    """仿真用：不启动任何外部进程，只记录将要执行的命令"""

    async def run(self, template: str, variables: Mapping[str, object], env: Mapping[str, str]) -> None:
        logger.debug("lifecycle.command_skipped", command=render(template, variables))


def read_pidfile(template: str, variables: Mapping[str, object], cwd: Optional[Path] = None) -> Optional[int]:
    """
    读取 pid 文件

    Returns:
        存活进程的 pid；文件缺失、内容非法或进程不存在时为 None
    """
    path = Path(render(template, variables))
    if cwd is not None and not path.is_absolute():
        path = cwd / path
    try:
        pid = int(path.read_text().strip())
    except (OSError, ValueError):
        logger.warning("lifecycle.pidfile_unreadable", path=str(path))
        return None
    if not psutil.pid_exists(pid):
        logger.warning("lifecycle.pid_not_running", path=str(path), pid=pid)
        return None
    return pid
