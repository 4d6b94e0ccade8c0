"""
Benchmark Runner
按运行计划驱动每次运行的完整生命周期，并把测量记录逐条写入 CSV
"""

import socket
import threading
from pathlib import Path
from typing import Dict, Mapping, Optional, Union

import structlog

from ..config.settings import Settings, get_settings
from ..core.exceptions import (
    EnergyAttributionError,
    EnergySourceUnavailableError,
    ErrorCategory,
    ExperimentConfigError,
    LifecycleCommandError,
    OrchestrationError,
    WorkloadTransportError,
)
from ..core.metrics import MetricsCollector, get_metrics_collector
from ..energy.attribution import integrate_session
from ..energy.clock import MonotonicClock, VirtualClock
from ..energy.sampler import EnergySampler
from ..energy.sources import EnergySource, create_energy_source
from ..models.energy_models import EnergySourceKind
from ..models.experiment_models import Experiment, RunPlan
from ..models.measurement_models import (
    FailureReason,
    MeasurementRecord,
    PlanSummary,
    RunStatus,
)
from ..models.workload_models import ProbeOutcome, ReadinessProbe, TestPlan, WorkloadSummary
from ..simulation.profiles import merge_offsets
from ..simulation.virtual_workload import SimulatedWorkloadExecutor
from ..workload.plan_loader import load_test_plan
from ..workload.readiness import probe_ready
from ..workload.runner import execute_plan
from ..workload.templating import render
from .lifecycle import CommandRunner, NullCommandRunner, RunContext, read_pidfile, stack_environment
from .records import load_records, persist_record

logger = structlog.get_logger(__name__)

APP_TARGET = "app"
SIMULATED_HOST = "simulated"

# 同一进程内同时只允许一次运行
_RUN_LOCK = threading.Lock()


class HttpWorkloadExecutor:
    """
    真实 HTTP 负载执行器

    Args:
        plan: 测试计划
        timeout_s: 单请求超时
        client: 可注入的 httpx.AsyncClient
    """

    def __init__(self, plan: TestPlan, timeout_s: float = 30.0, client=None):
        self.plan = plan
        self.timeout_s = timeout_s
        self.client = client

    async def boot(self, context: RunContext, variables: Mapping[str, object]) -> None:
        # 应用由 setup 命令启动
        return None

    async def wait_ready(self, probe: Optional[ReadinessProbe], variables: Mapping[str, object]) -> ProbeOutcome:
        if probe is None:
            return ProbeOutcome(ready=True, waited_s=0.0)
        rendered = probe.model_copy(update={"url": render(probe.url, variables)})
        return await probe_ready(rendered, client=self.client)

    async def execute(self, context: RunContext, variables: Mapping[str, object]) -> WorkloadSummary:
        return await execute_plan(
            self.plan,
            str(variables["base_url"]),
            timeout_s=self.timeout_s,
            client=self.client,
        )


class _AttemptFailed(Exception):
    """单次尝试内部的失败信号"""

    def __init__(self, reason: FailureReason, message: str):
        super().__init__(message)
        self.reason = reason
        self.message = message


class BenchmarkRunner:
    """
    基准运行编排器

    每次运行：
    1. setup 命令（替换变量同时以 STACK_<NAME> 环境变量导出）
    2. 等待就绪探测
    3. 开始对应用进程树采样
    4. 执行测试计划
    5. 停止采样并归因
    6. teardown（总是执行）与冷却

    失败的运行不会抛出异常，而是生成 status=failed 的记录并按 max_retries 重试
    """

    def __init__(
        self,
        experiment: Experiment,
        source: EnergySource,
        executor,
        clock=None,
        command_runner: Optional[CommandRunner] = None,
        sampler_period_s: float = 0.1,
        metrics: Optional[MetricsCollector] = None,
        host_label: Optional[str] = None,
        simulated_targets: bool = False,
    ):
        self.experiment = experiment
        self.lifecycle = experiment.lifecycle
        self.source = source
        self.executor = executor
        self.clock = clock or MonotonicClock()
        self.command_runner = command_runner or CommandRunner(
            cwd=experiment.source_path.parent if experiment.source_path else None
        )
        self.sampler_period_s = sampler_period_s
        self.metrics = metrics or get_metrics_collector()
        self.host_label = host_label or experiment.host or socket.gethostname()
        self.simulated_targets = simulated_targets

    def variables_for(self, context: RunContext) -> Dict[str, object]:
        """一次运行的全部替换变量"""
        variables: Dict[str, object] = dict(self.experiment.substitution_variables(context.config))
        variables["iteration"] = context.iteration
        variables["base_url"] = render(self.lifecycle.base_url, variables)
        return variables

    def _targets(self, variables: Mapping[str, object]) -> Dict[str, object]:
        if self.simulated_targets:
            return {target: None for target in self.experiment.energy.target_shares}
        if not self.lifecycle.pidfile:
            raise _AttemptFailed(FailureReason.PID_UNAVAILABLE, "lifecycle declares no pidfile")
        cwd = self.experiment.source_path.parent if self.experiment.source_path else None
        pid = read_pidfile(self.lifecycle.pidfile, variables, cwd=cwd)
        if pid is None:
            raise _AttemptFailed(FailureReason.PID_UNAVAILABLE, "application pid unavailable")
        return {APP_TARGET: pid}

    async def run_single(self, context: RunContext) -> MeasurementRecord:
        """
        执行一次运行（含重试）

        Args:
            context: 运行上下文

        Returns:
            MeasurementRecord；最后一次尝试的结果

        Raises:
            OrchestrationError: 已有运行在进行中
        """
        if not _RUN_LOCK.acquire(blocking=False):
            raise OrchestrationError(
                "another run is already in progress",
                details={"config_id": context.config.id, "iteration": context.iteration},
            )
        try:
            record = None
            for attempt in range(self.lifecycle.max_retries + 1):
                record = await self._attempt(context.with_attempt(attempt))
                if record.is_ok:
                    break
                if attempt < self.lifecycle.max_retries:
                    logger.info(
                        "run.retry",
                        config_id=context.config.id,
                        iteration=context.iteration,
                        attempt=attempt + 1,
                        reason=record.reason,
                    )
            return record
        finally:
            _RUN_LOCK.release()

    async def _attempt(self, context: RunContext) -> MeasurementRecord:
        variables = self.variables_for(context)
        env = stack_environment(variables)
        started_at = self.clock.wall_time()
        summary: Optional[WorkloadSummary] = None
        joules: Optional[float] = None
        sampler: Optional[EnergySampler] = None
        failure: Optional[_AttemptFailed] = None

        logger.info(
            "run.started",
            config_id=context.config.id,
            iteration=context.iteration,
            attempt=context.attempt,
        )
        try:
            self.source.prepare(context)
            started_at = self.clock.wall_time()
            try:
                await self.command_runner.run_all(self.lifecycle.setup_commands, variables, env)
            except LifecycleCommandError as e:
                raise _AttemptFailed(FailureReason.SETUP_FAILED, e.message)

            targets = None
            if self.lifecycle.include_startup:
                targets = self._targets(variables)
                sampler = await self._start_sampler(targets)

            await self.executor.boot(context, variables)
            outcome = await self.executor.wait_ready(self.lifecycle.readiness, variables)
            if not outcome.ready:
                raise _AttemptFailed(
                    FailureReason.READINESS_TIMEOUT,
                    f"not ready after {outcome.waited_s:.1f}s",
                )

            if sampler is None:
                targets = self._targets(variables)
                sampler = await self._start_sampler(targets)

            try:
                summary = await self.executor.execute(context, variables)
            except WorkloadTransportError as e:
                raise _AttemptFailed(FailureReason.TRANSPORT_ABORT, e.message)
            started_at = summary.started_at

            active, sampler = sampler, None
            samples = await active.stop()
            try:
                attribution = integrate_session(samples)
            except EnergyAttributionError as e:
                raise _AttemptFailed(FailureReason.ENERGY_SOURCE, e.message)
            joules = attribution.per_target_joules.get(APP_TARGET, attribution.attributed_joules)
            if joules <= 0:
                raise _AttemptFailed(FailureReason.ENERGY_SOURCE, "no energy attributed to the application")

            if summary.error_rate > self.lifecycle.error_rate_threshold:
                raise _AttemptFailed(
                    FailureReason.ERROR_RATE,
                    f"error rate {summary.error_rate:.4f} exceeds {self.lifecycle.error_rate_threshold}",
                )
        except _AttemptFailed as e:
            failure = e
        except EnergySourceUnavailableError as e:
            failure = _AttemptFailed(FailureReason.ENERGY_SOURCE, e.message)
        except Exception as e:
            logger.exception("run.unexpected_error", config_id=context.config.id, iteration=context.iteration)
            failure = _AttemptFailed(FailureReason.INTERNAL, f"{type(e).__name__}: {e}")
        finally:
            if sampler is not None:
                try:
                    await sampler.stop()
                except EnergySourceUnavailableError:
                    pass
            await self.command_runner.run_teardown(self.lifecycle.teardown_commands, variables, env)
            if self.lifecycle.cooldown_s > 0:
                await self.clock.sleep(self.lifecycle.cooldown_s)

        record = MeasurementRecord(
            host=self.host_label,
            config_id=context.config.id,
            assignments=dict(context.config.assignments),
            iteration=context.iteration,
            status=RunStatus.FAILED if failure else RunStatus.OK,
            reason=failure.reason.value if failure else None,
            joules=joules,
            runtime_s=summary.wall_runtime_s if summary else None,
            counts=dict(summary.counts) if summary else {},
            error_count=summary.error_count if summary else 0,
            started_at=started_at,
        )
        self.metrics.record_run(
            record.status.value,
            joules=record.joules if record.is_ok else None,
            runtime_s=record.runtime_s if record.is_ok else None,
            request_counts={m.value: c for m, c in record.counts.items()},
        )
        log = logger.info if record.is_ok else logger.warning
        log(
            "run.finished",
            config_id=record.config_id,
            iteration=record.iteration,
            status=record.status.value,
            reason=record.reason,
            detail=failure.message if failure else None,
            joules=record.joules,
            runtime_s=record.runtime_s,
        )
        return record

    async def _start_sampler(self, targets: Mapping[str, object]) -> EnergySampler:
        sampler = EnergySampler(self.source, targets, clock=self.clock, period_s=self.sampler_period_s)
        await sampler.start()
        return sampler

    async def run_plan(
        self,
        run_plan: RunPlan,
        output_csv: Union[str, Path],
        resume: bool = False,
    ) -> PlanSummary:
        """
        按计划顺序串行执行全部条目

        Args:
            run_plan: 运行计划
            output_csv: 测量 CSV 路径
            resume: 跳过 CSV 中已有的 (config_id, iteration)

        Returns:
            PlanSummary

        Raises:
            OrchestrationError: 输出文件已存在（未指定 resume）或不可写
        """
        output_csv = Path(output_csv)
        exists = output_csv.exists() and output_csv.stat().st_size > 0
        if exists and not resume:
            raise OrchestrationError(
                f"output file already exists: {output_csv} (use resume to continue it)",
                details={"path": str(output_csv)},
                category=ErrorCategory.CONFIGURATION,
            )
        try:
            output_csv.parent.mkdir(parents=True, exist_ok=True)
            output_csv.touch(exist_ok=True)
        except OSError as e:
            raise OrchestrationError(
                f"output file is not writable: {output_csv}",
                details={"path": str(output_csv), "error": str(e)},
                category=ErrorCategory.CONFIGURATION,
            )

        done = {record.key for record in load_records(output_csv)} if exists else set()
        summary = PlanSummary(output_path=str(output_csv))
        if done:
            logger.info("plan.resumed", skipped=len(done), path=str(output_csv))

        dimensions = self.experiment.dimension_names
        for entry in run_plan.entries:
            if entry.key in done:
                summary.skipped += 1
                continue
            context = RunContext(config=entry.config, iteration=entry.iteration, entry_index=entry.index)
            record = await self.run_single(context)
            persist_record(record, output_csv, dimensions)
            if record.is_ok:
                summary.ok += 1
            else:
                summary.failed += 1
            logger.debug("plan.progress", done=summary.executed + summary.skipped, total=len(run_plan))

        logger.info(
            "plan.finished",
            ok=summary.ok,
            failed=summary.failed,
            skipped=summary.skipped,
            path=str(output_csv),
        )
        return summary


def create_benchmark_runner(
    experiment: Experiment,
    settings: Optional[Settings] = None,
    profile: Optional[str] = None,
    seed: Optional[int] = None,
    metrics: Optional[MetricsCollector] = None,
    client=None,
) -> BenchmarkRunner:
    """
    工厂函数：按实验定义组装 BenchmarkRunner

    simulated 能耗源的实验完全在虚拟时间内运行：
    不执行外部命令，负载由 SimulatedWorkloadExecutor 代替

    Args:
        experiment: 实验定义
        settings: 配置（默认全局配置）
        profile: 仿真 profile 名称
        seed: 覆盖能耗源种子
        metrics: 指标收集器
        client: 可注入的 httpx.AsyncClient

    Returns:
        BenchmarkRunner 实例

    Raises:
        ExperimentConfigError: profile 未声明或缺少测试计划
        EnergySourceUnavailableError: 能耗源不可用
    """
    settings = settings or get_settings()
    descriptor = experiment.energy
    if seed is not None:
        descriptor = descriptor.model_copy(update={"seed": seed})
    period_s = descriptor.sampling_period_s or settings.sampler.period_s
    plan = load_test_plan(experiment.workload_plan) if experiment.workload_plan else None

    if descriptor.kind == EnergySourceKind.SIMULATED:
        if profile is not None and profile not in experiment.simulation.profiles:
            raise ExperimentConfigError(
                f"unknown simulation profile {profile!r}",
                path=experiment.source_path,
            )
        chosen = experiment.simulation.profiles.get(profile) if profile else None
        power_offsets = merge_offsets(descriptor.power_offsets, chosen.power_offsets if chosen else {})
        runtime_offsets = chosen.runtime_offsets if chosen else {}

        clock = VirtualClock(step_s=descriptor.sampling_period_s or settings.sampler.virtual_step_s)
        source = create_energy_source(descriptor, clock=clock, power_offsets=power_offsets)
        executor = SimulatedWorkloadExecutor(
            plan,
            experiment.simulation,
            clock,
            runtime_offsets=runtime_offsets,
            seed=descriptor.seed,
        )
        logger.info("runner.simulated", profile=profile, seed=descriptor.seed)
        return BenchmarkRunner(
            experiment,
            source,
            executor,
            clock=clock,
            command_runner=NullCommandRunner(),
            sampler_period_s=period_s,
            metrics=metrics,
            host_label=SIMULATED_HOST,
            simulated_targets=True,
        )

    if profile is not None:
        raise ExperimentConfigError(
            "simulation profiles require a simulated energy source", path=experiment.source_path
        )
    if plan is None:
        raise ExperimentConfigError("experiment declares no [workload] plan", path=experiment.source_path)

    clock = MonotonicClock()
    source = create_energy_source(descriptor, clock=clock)
    source.check()
    return BenchmarkRunner(
        experiment,
        source,
        HttpWorkloadExecutor(plan, timeout_s=settings.run.http_timeout_s, client=client),
        clock=clock,
        command_runner=CommandRunner(
            timeout_s=settings.run.command_timeout_s,
            cwd=experiment.source_path.parent if experiment.source_path else None,
        ),
        sampler_period_s=period_s,
        metrics=metrics,
    )
