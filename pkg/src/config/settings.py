"""
应用配置管理
使用 Pydantic Settings 加载环境变量（前缀 WATTBENCH_）
"""

from functools import lru_cache
from typing import Optional, Literal

from pydantic_settings import BaseSettings, SettingsConfigDict


class AppConfig(BaseSettings):
    """应用配置"""

    # 日志配置（WATTBENCH_LOG）
    log: str = "INFO"
    log_json: bool = False

    # 监控配置
    enable_metrics: bool = False
    metrics_port: Optional[int] = None

    model_config = SettingsConfigDict(env_prefix="WATTBENCH_", extra="ignore")


class SamplerConfig(BaseSettings):
    """能耗采样配置"""

    # RAPL 计数器毫秒级更新，100 ms 采样
    period_s: float = 0.1
    # 虚拟时钟步长
    virtual_step_s: float = 0.1

    model_config = SettingsConfigDict(env_prefix="WATTBENCH_SAMPLER_", extra="ignore")


class RunConfig(BaseSettings):
    """基准运行配置"""

    ordering: Literal["blocked", "round-robin"] = "blocked"
    cooldown_s: float = 5.0
    max_retries: int = 0
    error_rate_threshold: float = 0.01

    # 超时配置
    http_timeout_s: float = 30.0
    command_timeout_s: float = 600.0

    model_config = SettingsConfigDict(env_prefix="WATTBENCH_RUN_", extra="ignore")


class AnalysisConfig(BaseSettings):
    """统计分析配置"""

    alpha: float = 0.05
    metric: Literal["joules", "runtime_s"] = "joules"

    # 碳足迹外推
    carbon_intensity_g_per_kwh: float = 300.0
    duty_cycle: float = 1.0

    model_config = SettingsConfigDict(env_prefix="WATTBENCH_ANALYSIS_", extra="ignore")


class Settings:
    """全局配置单例"""

    def __init__(self):
        self.app = AppConfig()
        self.sampler = SamplerConfig()
        self.run = RunConfig()
        self.analysis = AnalysisConfig()

    def validate(self) -> bool:
        """验证配置"""
        errors = []

        if self.sampler.period_s <= 0:
            errors.append("WATTBENCH_SAMPLER_PERIOD_S must be > 0")
        if not 0 <= self.run.error_rate_threshold <= 1:
            errors.append("WATTBENCH_RUN_ERROR_RATE_THRESHOLD must be within [0, 1]")
        if not 0 < self.analysis.alpha < 1:
            errors.append("WATTBENCH_ANALYSIS_ALPHA must be within (0, 1)")
        if not 0 < self.analysis.duty_cycle <= 1:
            errors.append("WATTBENCH_ANALYSIS_DUTY_CYCLE must be within (0, 1]")

        self.errors = errors
        return not errors

    def as_dict(self) -> dict:
        """导出全部配置（用于日志 / 调试）"""
        return {
            "app": self.app.model_dump(),
            "sampler": self.sampler.model_dump(),
            "run": self.run.model_dump(),
            "analysis": self.analysis.model_dump(),
        }


@lru_cache()
def get_settings() -> Settings:
    """
    获取全局配置单例

    Returns:
        Settings 实例
    """
    return Settings()
