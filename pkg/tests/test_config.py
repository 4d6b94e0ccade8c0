"""
配置与核心模块测试
测试环境变量配置、异常映射、错误处理器与指标收集
"""

from unittest.mock import Mock

import pytest
import structlog

from src.config.settings import AnalysisConfig, RunConfig, Settings, get_settings
from src.core.exceptions import (
    AnalysisInfeasibleError,
    ApplicationException,
    DegenerateDataError,
    EnergySourceUnavailableError,
    ErrorCategory,
    ErrorHandler,
    ExitCode,
    ExperimentConfigError,
    OrchestrationError,
    PlanValidationError,
    RecordFormatError,
    WorkloadTransportError,
    exit_code_for,
)
from src.core.logging import configure_logging
from src.core.metrics import MetricsCollector


# ==================== 配置测试 ====================

class TestSettings:
    """环境变量配置测试"""

    def test_defaults(self):
        """测试：默认值"""
        settings = Settings()

        assert settings.run.ordering == "blocked"
        assert settings.run.cooldown_s == 5.0
        assert settings.run.error_rate_threshold == 0.01
        assert settings.analysis.alpha == 0.05
        assert settings.analysis.carbon_intensity_g_per_kwh == 300.0
        assert settings.sampler.period_s == 0.1
        assert settings.validate()

    def test_env_override(self, monkeypatch):
        """测试：WATTBENCH_ 前缀覆盖"""
        monkeypatch.setenv("WATTBENCH_RUN_ORDERING", "round-robin")
        monkeypatch.setenv("WATTBENCH_ANALYSIS_ALPHA", "0.01")
        monkeypatch.setenv("WATTBENCH_LOG", "DEBUG")

        settings = Settings()

        assert settings.run.ordering == "round-robin"
        assert settings.analysis.alpha == 0.01
        assert settings.app.log == "DEBUG"

    def test_invalid_ordering(self, monkeypatch):
        """测试：非法 ordering 值"""
        monkeypatch.setenv("WATTBENCH_RUN_ORDERING", "random")

        with pytest.raises(ValueError):
            RunConfig()

    @pytest.mark.parametrize("name,value", [
        ("WATTBENCH_ANALYSIS_ALPHA", "1.5"),
        ("WATTBENCH_ANALYSIS_DUTY_CYCLE", "0"),
        ("WATTBENCH_RUN_ERROR_RATE_THRESHOLD", "2"),
        ("WATTBENCH_SAMPLER_PERIOD_S", "0"),
    ])
    def test_validate_rejects(self, monkeypatch, name, value):
        """测试：越界配置被 validate 拒绝"""
        monkeypatch.setenv(name, value)
        settings = Settings()

        assert not settings.validate()
        assert len(settings.errors) == 1
        assert name in settings.errors[0]

    def test_as_dict(self):
        """测试：导出全部配置"""
        assert set(Settings().as_dict()) == {"app", "sampler", "run", "analysis"}

    def test_singleton(self):
        """测试：get_settings 返回同一实例"""
        assert get_settings() is get_settings()

    def test_analysis_metric_choices(self, monkeypatch):
        """测试：分析指标只接受 joules / runtime_s"""
        monkeypatch.setenv("WATTBENCH_ANALYSIS_METRIC", "watts")

        with pytest.raises(ValueError):
            AnalysisConfig()


# ==================== 异常测试 ====================

class TestExceptions:
    """异常层次与退出码测试"""

    @pytest.mark.parametrize("error,code", [
        (ExperimentConfigError("bad"), ExitCode.CONFIG_ERROR),
        (PlanValidationError("bad"), ExitCode.CONFIG_ERROR),
        (RecordFormatError("bad", row=3), ExitCode.CONFIG_ERROR),
        (EnergySourceUnavailableError("no rapl"), ExitCode.SOURCE_UNAVAILABLE),
        (AnalysisInfeasibleError("one group"), ExitCode.ANALYSIS_INFEASIBLE),
        (DegenerateDataError("all equal"), ExitCode.ANALYSIS_INFEASIBLE),
        (WorkloadTransportError("refused"), ExitCode.RUN_FAILURES),
        (OrchestrationError("busy"), ExitCode.RUN_FAILURES),
        (RuntimeError("boom"), ExitCode.RUN_FAILURES),
    ])
    def test_exit_codes(self, error, code):
        """测试：异常到退出码的映射"""
        assert exit_code_for(error) == code

    def test_config_error_position(self):
        """测试：配置错误携带位置"""
        error = ExperimentConfigError("parse error", path="e.toml", line=3, column=7)

        assert error.category == ErrorCategory.CONFIGURATION
        assert error.details == {"path": "e.toml", "line": 3, "column": 7}
        assert str(error).startswith("[CONFIGURATION]")

    def test_to_dict(self):
        """测试：结构化字典"""
        payload = ApplicationException("x", details={"k": 1}).to_dict()

        assert payload["error_type"] == "ApplicationException"
        assert payload["category"] == "system"
        assert payload["details"] == {"k": 1}


class TestErrorHandler:
    """错误处理器测试"""

    def test_application_error(self):
        """测试：应用异常的响应与日志"""
        logger = Mock()
        handler = ErrorHandler(logger=logger)
        response = handler.handle_error(
            EnergySourceUnavailableError("no counters", path="/sys/class/powercap"),
            {"operation": "run"},
        )

        assert response["exit_code"] == ExitCode.SOURCE_UNAVAILABLE
        assert response["context"] == {"operation": "run"}
        logger.error.assert_called_once()
        assert logger.error.call_args.args == ("error.handled",)
        assert logger.error.call_args.kwargs["operation"] == "run"
        assert logger.error.call_args.kwargs["path"] == "/sys/class/powercap"

    def test_generic_error(self):
        """测试：普通异常归为 system"""
        handler = ErrorHandler()
        response = handler.handle_error(RuntimeError("boom"), {"operation": "test"})

        assert response["category"] == "system"
        assert response["message"] == "boom"
        assert response["exit_code"] == ExitCode.RUN_FAILURES

    def test_logs_error_type(self):
        """测试：日志带异常类型，缺省 operation 为 unknown"""
        logger = Mock()
        ErrorHandler(logger=logger).handle_error(RecordFormatError("bad"), {})

        kwargs = logger.error.call_args.kwargs
        assert kwargs["error_type"] == "RecordFormatError"
        assert kwargs["operation"] == "unknown"


# ==================== 日志与指标测试 ====================

class TestLogging:
    """结构化日志测试"""

    def test_logs_go_to_stderr(self, capsys):
        """测试：日志写 stderr，stdout 保持干净"""
        configure_logging("INFO", json_output=True, force=True)
        structlog.get_logger("test").info("unit.event", value=3)

        captured = capsys.readouterr()
        assert captured.out == ""
        assert '"event": "unit.event"' in captured.err
        assert '"value": 3' in captured.err

    def test_level_filters(self, capsys):
        """测试：低于级别的日志被过滤"""
        configure_logging("WARNING", json_output=True, force=True)
        structlog.get_logger("test").info("unit.hidden")

        assert "unit.hidden" not in capsys.readouterr().err
        configure_logging("INFO", force=True)


class TestMetrics:
    """Prometheus 指标测试"""

    def test_record_run(self):
        """测试：运行与请求计数"""
        metrics = MetricsCollector(enabled=True)
        metrics.record_run("ok", joules=1500.0, runtime_s=60.0, request_counts={"GET": 10, "POST": 2})
        metrics.record_run("failed")

        summary = metrics.get_metrics_summary()
        assert summary["runs"] == {"ok": 1.0, "failed": 1.0}
        assert summary["requests"] == {"GET": 10.0, "POST": 2.0}

    def test_disabled(self):
        """测试：禁用时不记录"""
        metrics = MetricsCollector(enabled=False)
        metrics.record_run("ok", joules=1.0)

        assert metrics.get_metrics_summary() == {"enabled": False}

    def test_independent_registries(self):
        """测试：多个收集器不冲突"""
        first = MetricsCollector(enabled=True)
        second = MetricsCollector(enabled=True)
        first.record_run("ok")

        assert second.get_metrics_summary()["runs"] == {}


if __name__ == "__main__":
    pytest.main([__file__, "-v", "--tb=short"])
