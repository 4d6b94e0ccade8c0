"""
虚拟工作负载：不发 HTTP 请求，只推进虚拟时钟

请求计数等于 total_requests(plan)；运行时间 = base_runtime_s × (1 + offset) × (1 + noise)
"""

from typing import Mapping, Optional

import structlog

from ..energy.clock import VirtualClock
from ..energy.simulated import run_seed
from ..models.experiment_models import SimulationSettings
from ..models.workload_models import HttpMethod, ProbeOutcome, TestPlan, WorkloadSummary
from ..workload.plan_loader import total_requests
from .profiles import resolve_offset

logger = structlog.get_logger(__name__)

RUNTIME_STREAM = 1


class SimulatedWorkloadExecutor:
    """
    仿真负载执行器

    Args:
        plan: 测试计划（只用于计数；None 时计数为 0）
        settings: [simulation] 段
        clock: 与仿真能耗源共享的虚拟时钟
        runtime_offsets: 配置 id 或 'dim=value' → 相对运行时间偏移
        seed: 随机种子
    """

    def __init__(
        self,
        plan: Optional[TestPlan],
        settings: SimulationSettings,
        clock: VirtualClock,
        runtime_offsets: Optional[Mapping[str, float]] = None,
        seed: int = 0,
    ):
        self.plan = plan
        self.settings = settings
        self.clock = clock
        self.runtime_offsets = dict(runtime_offsets or {})
        self.seed = seed
        self._counts = total_requests(plan) if plan is not None else {m: 0 for m in HttpMethod}

    def runtime_for(self, context) -> float:
        offset = resolve_offset(self.runtime_offsets, context.config)
        noise = 0.0
        if self.settings.runtime_noise > 0:
            rng = run_seed(self.seed, context.config.id, context.iteration, context.attempt, stream=RUNTIME_STREAM)
            noise = float(rng.normal(0.0, self.settings.runtime_noise))
        runtime = self.settings.base_runtime_s * (1.0 + offset) * (1.0 + noise)
        # 运行时间必须为正
        return max(runtime, self.clock.step_s)

    async def boot(self, context, variables: Mapping[str, object]) -> None:
        """模拟应用启动"""
        if self.settings.startup_s > 0:
            self.clock.advance(self.settings.startup_s)

    async def wait_ready(self, probe, variables: Mapping[str, object]) -> ProbeOutcome:
        """仿真应用启动后立即就绪"""
        return ProbeOutcome(ready=True, waited_s=0.0, attempts=0)

    async def execute(self, context, variables: Mapping[str, object]) -> WorkloadSummary:
        started_at = self.clock.wall_time()
        runtime = self.runtime_for(context)
        self.clock.advance(runtime)
        return WorkloadSummary(
            counts=dict(self._counts),
            error_count=0,
            wall_runtime_s=runtime,
            started_at=started_at,
            ended_at=self.clock.wall_time(),
        )
