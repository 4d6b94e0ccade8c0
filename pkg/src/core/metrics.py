"""
监控指标模块
使用 Prometheus 收集基准运行指标
"""

from typing import Optional, Dict, Any, Mapping
from datetime import datetime

from prometheus_client import CollectorRegistry, Counter, Histogram, start_http_server


class MetricsCollector:
    """
    指标收集器

    收集以下类型的指标:
    - Counter: 运行次数、请求次数
    - Histogram: 每次运行的能耗与运行时间分布
    """

    def __init__(
        self,
        enabled: bool = True,
        port: Optional[int] = None
    ):
        """
        初始化指标收集器

        Args:
            enabled: 是否启用监控
            port: Prometheus 指标端口（None 表示不暴露）
        """
        self.enabled = enabled
        self.port = port
        # 独立 registry，避免重复注册
        self.registry = CollectorRegistry()

        if self.enabled:
            self._init_metrics()

            if port:
                start_http_server(port, registry=self.registry)

    def _init_metrics(self):
        """初始化所有指标"""
        self.runs_total = Counter(
            'wattbench_runs_total',
            'Benchmark runs by final status',
            ['status'],
            registry=self.registry
        )

        self.run_joules = Histogram(
            'wattbench_run_joules',
            'Attributed energy per successful run',
            buckets=[10, 100, 500, 1000, 5000, 10000, 20000, 50000],
            registry=self.registry
        )

        self.run_runtime = Histogram(
            'wattbench_run_runtime_seconds',
            'Workload wall runtime per successful run',
            buckets=[1, 5, 30, 60, 120, 300, 600, 1200],
            registry=self.registry
        )

        self.requests_total = Counter(
            'wattbench_requests_total',
            'HTTP requests issued by the workload runner',
            ['method'],
            registry=self.registry
        )

    def record_run(
        self,
        status: str,
        joules: Optional[float] = None,
        runtime_s: Optional[float] = None,
        request_counts: Optional[Mapping[str, int]] = None
    ):
        """记录一次运行"""
        if not self.enabled:
            return

        self.runs_total.labels(status=status).inc()
        if joules is not None:
            self.run_joules.observe(joules)
        if runtime_s is not None:
            self.run_runtime.observe(runtime_s)
        for method, count in (request_counts or {}).items():
            self.requests_total.labels(method=method).inc(count)

    def get_metrics_summary(self) -> Dict[str, Any]:
        """获取指标摘要"""
        if not self.enabled:
            return {"enabled": False}

        summary: Dict[str, Any] = {
            "enabled": True,
            "timestamp": datetime.now().isoformat(),
            "runs": {},
            "requests": {},
        }
        for metric in self.registry.collect():
            for sample in metric.samples:
                if sample.name == "wattbench_runs_total":
                    summary["runs"][sample.labels["status"]] = sample.value
                elif sample.name == "wattbench_requests_total":
                    summary["requests"][sample.labels["method"]] = sample.value
        return summary


# ========== 全局实例 ==========

_metrics_collector: Optional[MetricsCollector] = None


def get_metrics_collector(
    enabled: bool = False,
    port: Optional[int] = None
) -> MetricsCollector:
    """
    获取全局指标收集器

    Args:
        enabled: 是否启用监控
        port: Prometheus 端口

    Returns:
        MetricsCollector 实例
    """
    global _metrics_collector

    if _metrics_collector is None:
        _metrics_collector = MetricsCollector(
            enabled=enabled,
            port=port
        )

    return _metrics_collector
