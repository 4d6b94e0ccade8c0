"""
仿真能耗源

功率与 CPU 份额均为分段常数，读数是虚拟时间的闭式函数：
counter(t) = Σ P_k · overlap_k(t)（微焦耳，按 max_range 取模），
target_ticks(t) = Σ share_k · ncpu · overlap_k(t)
"""

import zlib
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
import structlog

from ..models.energy_models import EnergyReading, EnergySourceDescriptor
from ..simulation.profiles import resolve_offset
from .clock import VirtualClock
from .sources import EnergySource

logger = structlog.get_logger(__name__)

# 每个计划条目占用的虚拟时间槽（秒），保证运行之间互不重叠
RUN_SLOT_S = 100_000.0
ATTEMPT_SLOT_S = 10_000.0


def run_seed(seed: int, config_id: str, iteration: int, attempt: int = 0, stream: int = 0) -> np.random.Generator:
    """(seed, config_id, iteration, attempt, stream) 决定的随机数发生器；功率与运行时间各用一个 stream"""
    return np.random.default_rng([seed, zlib.crc32(config_id.encode("utf-8")), iteration, attempt, stream])


@dataclass
class _Segment:
    start: float
    power_w: float
    shares: Dict[str, float] = field(default_factory=dict)


class SimulatedEnergySource(EnergySource):
    """
    确定性仿真能耗源

    Args:
        descriptor: [energy] 段（kind = simulated）
        clock: 虚拟时钟
        power_offsets: 覆盖 descriptor.power_offsets（仿真 profile 使用）
        cpu_count: 仿真主机 CPU 数
    """

    def __init__(
        self,
        descriptor: EnergySourceDescriptor,
        clock: Optional[VirtualClock] = None,
        power_offsets: Optional[Mapping[str, float]] = None,
        cpu_count: int = 4,
    ):
        self.descriptor = descriptor
        self.clock = clock or VirtualClock(step_s=descriptor.sampling_period_s or 0.1)
        self.power_offsets = dict(descriptor.power_offsets if power_offsets is None else power_offsets)
        self.cpu_count = cpu_count
        self.accountant = self
        self.dead: Dict[str, float] = {}
        self._reset(self.clock.now(), descriptor.base_power_w)

    def _reset(self, origin: float, power_w: float) -> None:
        self.origin = origin
        self.dead = {}
        self._segments: List[_Segment] = [
            _Segment(start=origin, power_w=power_w, shares=dict(self.descriptor.target_shares))
        ]

    def power_for(self, config, iteration: int, attempt: int = 0) -> float:
        """某次运行的恒定功率：base × (1 + offset) × (1 + noise)，下限为 0"""
        offset = resolve_offset(self.power_offsets, config)
        noise = 0.0
        if self.descriptor.noise > 0:
            rng = run_seed(self.descriptor.seed, config.id, iteration, attempt)
            noise = float(rng.normal(0.0, self.descriptor.noise))
        return max(0.0, self.descriptor.base_power_w * (1.0 + offset) * (1.0 + noise))

    def prepare(self, context) -> None:
        """计数器归零；虚拟时钟下先移到该条目的时间槽起点"""
        if getattr(self.clock, "virtual", False):
            origin = context.entry_index * RUN_SLOT_S + context.attempt * ATTEMPT_SLOT_S
            self.clock.jump_to(origin)
        else:
            origin = self.clock.now()
        power = self.power_for(context.config, context.iteration, context.attempt)
        self._reset(origin, power)
        logger.debug(
            "simulated_source.prepared",
            config_id=context.config.id,
            iteration=context.iteration,
            power_w=power,
        )

    def _split(self, now: float) -> _Segment:
        last = self._segments[-1]
        if now < last.start:
            raise ValueError("simulated source cannot change state in the past")
        if now == last.start:
            return last
        segment = _Segment(start=now, power_w=last.power_w, shares=dict(last.shares))
        self._segments.append(segment)
        return segment

    def set_share(self, target: str, share: float) -> None:
        """从当前时刻起改变目标份额"""
        if not 0 <= share <= 1:
            raise ValueError("share must lie in [0, 1]")
        segment = self._split(self.clock.now())
        segment.shares[target] = share

    def kill_target(self, target: str) -> None:
        """目标退出：此后计数冻结"""
        now = self.clock.now()
        self.dead[target] = self._target_seconds(target, now)
        self._split(now).shares[target] = 0.0

    def _overlaps(self, now: float):
        for index, segment in enumerate(self._segments):
            end = self._segments[index + 1].start if index + 1 < len(self._segments) else now
            end = min(end, now)
            if end > segment.start:
                yield segment, end - segment.start

    def energy_uj(self, now: Optional[float] = None) -> float:
        """会话起点以来的累计能耗（未取模）"""
        now = self.clock.now() if now is None else now
        return sum(segment.power_w * width for segment, width in self._overlaps(now)) * 1e6

    def _target_seconds(self, target: str, now: float) -> float:
        if target in self.dead:
            return self.dead[target]
        return sum(
            segment.shares.get(target, 0.0) * self.cpu_count * width
            for segment, width in self._overlaps(now)
        )

    def read(self) -> EnergyReading:
        now = self.clock.now()
        return EnergyReading(
            counter_uj=self.energy_uj(now) % self.descriptor.max_range_uj,
            max_range_uj=self.descriptor.max_range_uj,
            timestamp_ns=self.clock.now_ns(),
        )

    def snapshot(self, targets: Mapping[str, object]) -> Tuple[Dict[str, float], float, List[str]]:
        """仿真 CPU 记账：整机始终满载"""
        now = self.clock.now()
        ticks = {target: self._target_seconds(target, now) for target in targets}
        total = self.cpu_count * max(0.0, now - self.origin)
        dead = sorted(t for t in targets if t in self.dead)
        return ticks, total, dead
