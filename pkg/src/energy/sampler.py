"""
能耗采样器

单个后台活动持有能耗源，按周期把 EnergySample 追加到会话缓冲区；
虚拟时钟下改为订阅时钟步进
"""

import asyncio
from typing import List, Mapping, Optional

import structlog

from ..core.exceptions import ApplicationException, EnergySourceUnavailableError
from ..models.energy_models import EnergySample
from .clock import MonotonicClock
from .sources import EnergySource

logger = structlog.get_logger(__name__)


def sample(source: EnergySource, targets: Mapping[str, object]) -> EnergySample:
    """
    读取一个一致快照：能耗读数 + 目标与整机 CPU 记账

    Args:
        source: 能耗源
        targets: 目标 id → pid（仿真目标的值被忽略）

    Returns:
        EnergySample；已退出的目标列在 dead_targets 中，计数冻结
    """
    ticks, total, dead = source.accountant.snapshot(targets)
    reading = source.read()
    return EnergySample(
        reading=reading,
        target_cpu_ticks=ticks,
        total_cpu_ticks=total,
        dead_targets=dead,
    )


class EnergySampler:
    """
    会话采样器

    Args:
        source: 能耗源
        targets: 目标 id → pid
        clock: MonotonicClock 或 VirtualClock
        period_s: 采样周期（秒）
    """

    def __init__(
        self,
        source: EnergySource,
        targets: Mapping[str, object],
        clock=None,
        period_s: float = 0.1,
    ):
        if period_s <= 0:
            raise ValueError("period_s must be positive")
        self.source = source
        self.targets = dict(targets)
        self.clock = clock or MonotonicClock()
        self.period_s = period_s

        self._buffer: List[EnergySample] = []
        self._task: Optional[asyncio.Task] = None
        self._running = False
        self._last_sampled_at: Optional[float] = None
        self._error: Optional[ApplicationException] = None

    @property
    def samples(self) -> List[EnergySample]:
        return list(self._buffer)

    def _take(self) -> None:
        try:
            self._buffer.append(sample(self.source, self.targets))
            self._last_sampled_at = self.clock.now()
        except EnergySourceUnavailableError as e:
            if self._error is None:
                self._error = e
            logger.warning("sampler.sample_dropped", error=e.message)

    def _on_tick(self, now: float) -> None:
        if self._last_sampled_at is None or now - self._last_sampled_at >= self.period_s - 1e-12:
            self._take()

    async def _loop(self) -> None:
        while self._running:
            await asyncio.sleep(self.period_s)
            if self._running:
                self._take()

    async def start(self) -> None:
        """取首个样本并开始周期采样"""
        if self._running:
            raise RuntimeError("sampler already running")
        self._buffer = []
        self._error = None
        self._running = True
        self._take()
        if getattr(self.clock, "virtual", False):
            self.clock.subscribe(self._on_tick)
        else:
            self._task = asyncio.create_task(self._loop())
        logger.debug("sampler.started", targets=sorted(self.targets), period_s=self.period_s)

    async def stop(self) -> List[EnergySample]:
        """
        停止采样，取最终样本并返回会话缓冲区

        Raises:
            EnergySourceUnavailableError: 会话中能耗源读取失败
        """
        if not self._running:
            raise RuntimeError("sampler is not running")
        self._running = False
        if getattr(self.clock, "virtual", False):
            self.clock.unsubscribe(self._on_tick)
        elif self._task is not None:
            self._task.cancel()
            try:
                await self._task
            except asyncio.CancelledError:
                pass
            self._task = None

        if self._last_sampled_at is None or self.clock.now() > self._last_sampled_at:
            self._take()
        logger.debug("sampler.stopped", samples=len(self._buffer))

        if self._error is not None:
            raise self._error
        return self.samples
