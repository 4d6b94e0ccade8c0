"""
工作负载数据模型
定义测试计划、操作组、HTTP 步骤、就绪探测与负载摘要
"""

from datetime import datetime
from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator


class HttpMethod(str, Enum):
    """HTTP 方法"""
    GET = "GET"
    POST = "POST"
    PUT = "PUT"
    DELETE = "DELETE"


class StatusClass(str, Enum):
    """期望的响应状态类"""
    SUCCESS = "2xx"
    ANY = "any"

    def accepts(self, status: int) -> bool:
        if self is StatusClass.ANY:
            return True
        return 200 <= status < 300


class Capture(BaseModel):
    """从 JSON 响应中捕获字段"""
    variable: str = Field(..., description="变量名")
    path: str = Field(..., description="点分字段路径，如 data.id")


class HttpStep(BaseModel):
    """单个 HTTP 请求步骤"""
    method: HttpMethod
    path_template: str = Field(..., description="路径模板（含 {var} 占位符）")
    body_template: Optional[str] = Field(None, description="请求体模板")
    expected_status_class: StatusClass = StatusClass.SUCCESS
    capture: Optional[Capture] = None
    delay_s: float = Field(default=0.0, ge=0, description="请求后等待（秒）")


class OperationGroup(BaseModel):
    """操作组：workers 个并发 worker 各执行 loops 次步骤序列"""
    name: str
    workers: int = Field(..., description="并发 worker 数")
    loops: int = Field(..., description="循环次数")
    steps: List[HttpStep] = Field(..., min_length=1)

    @field_validator("workers", "loops")
    @classmethod
    def validate_positive(cls, v, info):
        if v < 1:
            raise ValueError(f"{info.field_name} must be >= 1")
        return v


class TestPlan(BaseModel):
    """声明式 HTTP 测试计划"""
    __test__ = False

    name: str = Field(default="plan")
    base_url_template: str = Field(default="{base_url}", description="基础 URL 模板")
    groups: List[OperationGroup] = Field(..., min_length=1)

    @model_validator(mode="after")
    def validate_unique_groups(self):
        names = [g.name for g in self.groups]
        if len(set(names)) != len(names):
            raise ValueError("group names must be unique")
        return self


class ReadinessProbe(BaseModel):
    """就绪探测"""
    url: str
    expected_status: int = 200
    timeout_s: float = Field(default=120.0, gt=0)
    poll_interval_s: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def validate_timing(self):
        if self.timeout_s < self.poll_interval_s:
            raise ValueError("timeout_s must be >= poll_interval_s")
        return self


class ProbeOutcome(BaseModel):
    """就绪探测结果（超时不是异常）"""
    ready: bool
    waited_s: float = Field(..., ge=0)
    attempts: int = Field(default=0, ge=0)
    last_status: Optional[int] = None


class WorkloadSummary(BaseModel):
    """一次负载执行摘要"""
    counts: Dict[HttpMethod, int] = Field(
        default_factory=lambda: {m: 0 for m in HttpMethod}
    )
    error_count: int = Field(default=0, ge=0)
    wall_runtime_s: float = Field(..., gt=0)
    started_at: datetime
    ended_at: datetime

    @property
    def total_requests(self) -> int:
        return sum(self.counts.values())

    @property
    def error_rate(self) -> float:
        total = self.total_requests
        return self.error_count / total if total else 0.0
