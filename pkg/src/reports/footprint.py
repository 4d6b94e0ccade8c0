"""
碳足迹外推：把单次运行的能耗按连续负载外推到每日 / 每年
"""

from typing import Optional

from ..core.exceptions import StatisticsError
from ..models.analysis_models import FootprintComparison, FootprintEstimate

SECONDS_PER_DAY = 86_400.0
DAYS_PER_YEAR = 365.0
JOULES_PER_WH = 3_600.0


def extrapolate_footprint(
    joules_per_run: float,
    runtime_s: float,
    duty_cycle: float = 1.0,
    carbon_intensity_g_per_kwh: float = 300.0,
    label: Optional[str] = None,
) -> FootprintEstimate:
    """
    外推年度能耗与排放

    runs/day = duty × 86400 / runtime；Wh/day = J × runs / 3600；
    kWh/yr = Wh/day × 365 / 1000；kg CO₂/yr = kWh/yr × 强度 / 1000

    Args:
        joules_per_run: 单次运行能耗（J）
        runtime_s: 单次运行时间（秒）
        duty_cycle: 负载占空比 (0, 1]
        carbon_intensity_g_per_kwh: 电网碳强度（g/kWh）
        label: 分组标签

    Returns:
        FootprintEstimate

    Raises:
        StatisticsError: 运行时间非正或参数越界
    """
    if runtime_s <= 0:
        raise StatisticsError("runtime must be positive", details={"runtime_s": runtime_s})
    if not 0 < duty_cycle <= 1:
        raise StatisticsError("duty cycle must lie in (0, 1]", details={"duty_cycle": duty_cycle})
    if carbon_intensity_g_per_kwh < 0 or joules_per_run < 0:
        raise StatisticsError(
            "energy and carbon intensity must be non-negative",
            details={"joules_per_run": joules_per_run, "intensity": carbon_intensity_g_per_kwh},
        )

    runs_per_day = duty_cycle * SECONDS_PER_DAY / runtime_s
    wh_per_day = joules_per_run * runs_per_day / JOULES_PER_WH
    kwh_per_year = wh_per_day * DAYS_PER_YEAR / 1000.0
    return FootprintEstimate(
        joules_per_run=joules_per_run,
        runtime_s=runtime_s,
        duty_cycle=duty_cycle,
        carbon_intensity_g_per_kwh=carbon_intensity_g_per_kwh,
        runs_per_day=runs_per_day,
        energy_wh_per_day=wh_per_day,
        energy_kwh_per_year=kwh_per_year,
        co2_kg_per_year=kwh_per_year * carbon_intensity_g_per_kwh / 1000.0,
        label=label,
    )


def compare_footprints(baseline: FootprintEstimate, candidate: FootprintEstimate) -> FootprintComparison:
    """候选相对基线的年度节省（负值表示候选更耗能）"""
    saved_kwh = baseline.energy_kwh_per_year - candidate.energy_kwh_per_year
    relative = saved_kwh / baseline.energy_kwh_per_year if baseline.energy_kwh_per_year > 0 else 0.0
    return FootprintComparison(
        baseline=baseline.label or "baseline",
        candidate=candidate.label or "candidate",
        kwh_per_year_saved=saved_kwh,
        co2_kg_per_year_saved=baseline.co2_kg_per_year - candidate.co2_kg_per_year,
        relative_saving=relative,
    )
