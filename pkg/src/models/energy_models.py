"""
能耗测量数据模型
定义计数器读数、采样快照、归因结果与能耗源描述
"""

from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator


class EnergySourceKind(str, Enum):
    """能耗源类型"""
    RAPL_SYSFS = "rapl-sysfs"
    SIMULATED = "simulated"


class EnergyReading(BaseModel):
    """
    系统累计能耗计数器读数

    components 保存每个计数器的 (counter_uj, max_range_uj)，
    多域读数按域分别处理回绕
    """
    counter_uj: float = Field(..., ge=0, description="累计微焦耳")
    max_range_uj: float = Field(..., gt=0, description="计数器回绕上限")
    timestamp_ns: int = Field(..., description="单调时钟纳秒")
    components: Optional[List[Tuple[float, float]]] = Field(
        None, description="各计数器 (counter_uj, max_range_uj)"
    )

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def validate_range(self):
        if self.counter_uj > self.max_range_uj:
            raise ValueError("counter_uj exceeds max_range_uj")
        return self


class EnergySample(BaseModel):
    """能耗 + CPU 记账的一致快照"""
    reading: EnergyReading
    target_cpu_ticks: Dict[str, float] = Field(
        default_factory=dict, description="目标 → 进程树累计 CPU 秒"
    )
    total_cpu_ticks: float = Field(..., ge=0, description="整机累计忙碌 CPU 秒")
    dead_targets: List[str] = Field(default_factory=list, description="已退出的目标（计数冻结）")

    @model_validator(mode="after")
    def validate_ticks(self):
        for target, ticks in self.target_cpu_ticks.items():
            if ticks < 0:
                raise ValueError(f"negative ticks for target {target!r}")
        return self

    @property
    def timestamp_ns(self) -> int:
        return self.reading.timestamp_ns


class AttributionResult(BaseModel):
    """会话归因结果"""
    per_target_joules: Dict[str, float] = Field(default_factory=dict, description="目标 → 焦耳")
    system_joules: float = Field(..., ge=0, description="系统总能耗（焦耳）")
    coverage: float = Field(..., ge=0, le=1, description="已归因 / 系统能耗")
    duration_s: float = Field(..., gt=0, description="会话时长（秒）")

    @property
    def attributed_joules(self) -> float:
        return sum(self.per_target_joules.values())


class EnergySourceDescriptor(BaseModel):
    """能耗源描述（来自实验文件 [energy] 段）"""
    kind: EnergySourceKind = Field(..., description="能耗源类型")
    counters: List[Path] = Field(default_factory=list, description="rapl-sysfs 计数器文件")
    base_power_w: float = Field(default=10.0, ge=0, description="仿真基准功率（瓦）")
    power_offsets: Dict[str, float] = Field(
        default_factory=dict, description="配置 id 或 'dim=value' → 相对功率偏移"
    )
    noise: float = Field(default=0.0, ge=0, description="仿真功率噪声幅度（相对）")
    seed: int = Field(default=0, description="仿真随机种子")
    target_shares: Dict[str, float] = Field(
        default_factory=lambda: {"app": 0.5}, description="仿真目标 CPU 份额"
    )
    max_range_uj: float = Field(default=2 ** 32, gt=0, description="仿真计数器回绕上限")
    sampling_period_s: Optional[float] = Field(None, gt=0, description="采样周期（覆盖设置）")

    @field_validator("target_shares")
    @classmethod
    def validate_shares(cls, v):
        for target, share in v.items():
            if not 0 <= share <= 1:
                raise ValueError(f"share of {target!r} must lie in [0, 1]")
        if sum(v.values()) > 1 + 1e-12:
            raise ValueError("target shares sum above 1")
        return v

    @model_validator(mode="after")
    def validate_kind(self):
        if self.kind == EnergySourceKind.SIMULATED:
            if "app" not in self.target_shares:
                raise ValueError("simulated source needs a share for target 'app'")
            for key, offset in self.power_offsets.items():
                if 1 + offset < 0:
                    raise ValueError(f"power offset for {key!r} gives negative power")
        return self
