"""
运行与测量数据模型
定义运行生命周期、测量记录和运行状态
"""

from datetime import datetime
from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, model_validator

from .workload_models import HttpMethod, ReadinessProbe


class RunStatus(str, Enum):
    """运行状态"""
    OK = "ok"
    FAILED = "failed"


class FailureReason(str, Enum):
    """失败原因"""
    SETUP_FAILED = "setup-failed"
    READINESS_TIMEOUT = "readiness-timeout"
    PID_UNAVAILABLE = "pid-unavailable"
    TRANSPORT_ABORT = "transport-abort"
    ERROR_RATE = "error-rate"
    ENERGY_SOURCE = "energy-source"
    INTERNAL = "internal-error"


class RunLifecycle(BaseModel):
    """
    单次运行的生命周期

    命令模板只能引用已声明的维度替换变量及内置变量
    """
    setup_commands: List[str] = Field(default_factory=list, description="setup 命令模板")
    teardown_commands: List[str] = Field(default_factory=list, description="teardown 命令模板")
    readiness: Optional[ReadinessProbe] = Field(None, description="就绪探测")
    pidfile: Optional[str] = Field(None, description="被测进程 pid 文件模板")
    base_url: str = Field(default="http://localhost:8080", description="被测应用基础 URL")
    cooldown_s: float = Field(default=5.0, ge=0, description="运行间冷却（秒）")
    max_retries: int = Field(default=0, ge=0, description="失败重试次数")
    error_rate_threshold: float = Field(default=0.01, ge=0, le=1, description="错误率阈值")
    include_startup: bool = Field(default=False, description="采样窗口是否包含启动阶段")


class MeasurementRecord(BaseModel):
    """一次基准运行的测量记录（CSV 一行）"""
    host: str = Field(..., description="主机标签")
    config_id: str
    assignments: Dict[str, str] = Field(default_factory=dict, description="维度 → 取值")
    iteration: int = Field(..., ge=0)
    status: RunStatus
    reason: Optional[str] = Field(None, description="失败原因")
    joules: Optional[float] = Field(None, ge=0)
    runtime_s: Optional[float] = Field(None, ge=0)
    counts: Dict[HttpMethod, int] = Field(
        default_factory=lambda: {m: 0 for m in HttpMethod}
    )
    error_count: int = Field(default=0, ge=0)
    started_at: datetime
    extra: Dict[str, str] = Field(default_factory=dict, description="未知附加列（读取时保留）")

    @model_validator(mode="after")
    def validate_status(self):
        if self.status == RunStatus.OK:
            if self.joules is None or self.runtime_s is None:
                raise ValueError("ok record requires joules and runtime_s")
            if self.joules <= 0 or self.runtime_s <= 0:
                raise ValueError("ok record requires positive joules and runtime_s")
        elif not self.reason:
            raise ValueError("failed record requires a reason")
        return self

    @property
    def key(self):
        return (self.config_id, self.iteration)

    @property
    def is_ok(self) -> bool:
        return self.status == RunStatus.OK

    def metric(self, name: str) -> float:
        value = getattr(self, name)
        if value is None:
            raise ValueError(f"record {self.key} has no {name}")
        return float(value)


class PlanSummary(BaseModel):
    """run_plan 的汇总"""
    ok: int = 0
    failed: int = 0
    skipped: int = 0
    output_path: Optional[str] = None

    @property
    def executed(self) -> int:
        return self.ok + self.failed
