"""
进程能耗归因

E_process = (CPU_process / CPU_total) × E_system，逐采样区间累加
"""

from typing import Dict, Sequence

import structlog

from ..core.exceptions import EnergyAttributionError
from ..models.energy_models import AttributionResult, EnergyReading, EnergySample

logger = structlog.get_logger(__name__)

MICROJOULES_PER_JOULE = 1e6


def _wrapped_delta(prev: float, curr: float, max_range: float) -> float:
    if curr >= prev:
        return curr - prev
    # 每个区间至多回绕一次
    return (max_range - prev) + curr


def delta_energy(prev: EnergyReading, curr: EnergyReading) -> float:
    """
    两次读数之间的能耗（焦耳）

    Args:
        prev: 前一次读数
        curr: 当前读数

    Returns:
        焦耳

    Raises:
        EnergyAttributionError: 时间戳非递增
    """
    if curr.timestamp_ns <= prev.timestamp_ns:
        raise EnergyAttributionError(
            "energy readings must have strictly increasing timestamps",
            details={"prev_ns": prev.timestamp_ns, "curr_ns": curr.timestamp_ns},
        )

    if (
        prev.components is not None
        and curr.components is not None
        and len(prev.components) == len(curr.components)
    ):
        delta_uj = sum(
            _wrapped_delta(p, c, max_range)
            for (p, max_range), (c, _) in zip(prev.components, curr.components)
        )
    else:
        delta_uj = _wrapped_delta(prev.counter_uj, curr.counter_uj, curr.max_range_uj)
    return delta_uj / MICROJOULES_PER_JOULE


def attribute_interval(s_prev: EnergySample, s_curr: EnergySample) -> Dict[str, float]:
    """
    单个采样区间的目标能耗

    份额 = Δtarget / Δtotal；份额之和超过 1（采样偏差）时按比例压到 1；
    Δtotal <= 0 时所有目标为 0

    Raises:
        EnergyAttributionError: 两个样本的目标集合不同
    """
    if set(s_prev.target_cpu_ticks) != set(s_curr.target_cpu_ticks):
        raise EnergyAttributionError(
            "samples carry different target sets",
            details={
                "prev": sorted(s_prev.target_cpu_ticks),
                "curr": sorted(s_curr.target_cpu_ticks),
            },
        )

    energy_j = delta_energy(s_prev.reading, s_curr.reading)
    total = s_curr.total_cpu_ticks - s_prev.total_cpu_ticks
    if total <= 0:
        return {target: 0.0 for target in s_curr.target_cpu_ticks}

    shares = {
        target: max(0.0, s_curr.target_cpu_ticks[target] - s_prev.target_cpu_ticks[target]) / total
        for target in s_curr.target_cpu_ticks
    }
    share_sum = sum(shares.values())
    if share_sum > 1.0:
        shares = {target: share / share_sum for target, share in shares.items()}
    return {target: share * energy_j for target, share in shares.items()}


def integrate_session(samples: Sequence[EnergySample]) -> AttributionResult:
    """
    整个会话的归因

    Args:
        samples: 时间递增的样本（至少 2 个）

    Returns:
        AttributionResult

    Raises:
        EnergyAttributionError: 样本少于 2 个、时间戳非递增或目标集合不一致
    """
    if len(samples) < 2:
        raise EnergyAttributionError(
            "a session needs at least two samples", details={"samples": len(samples)}
        )

    per_target: Dict[str, float] = {target: 0.0 for target in samples[0].target_cpu_ticks}
    system_joules = 0.0
    for prev, curr in zip(samples, samples[1:]):
        for target, joules in attribute_interval(prev, curr).items():
            per_target[target] += joules
        system_joules += delta_energy(prev.reading, curr.reading)

    attributed = sum(per_target.values())
    coverage = min(1.0, attributed / system_joules) if system_joules > 0 else 0.0
    duration_s = (samples[-1].timestamp_ns - samples[0].timestamp_ns) / 1e9

    return AttributionResult(
        per_target_joules=per_target,
        system_joules=system_joules,
        coverage=coverage,
        duration_s=duration_s,
    )
