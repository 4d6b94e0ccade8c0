"""
核心异常类
定义应用中所有异常类型和错误处理工具
"""

from typing import Optional, Dict, Any
from enum import Enum, IntEnum
from datetime import datetime

import structlog


class ErrorCategory(str, Enum):
    """错误类别"""
    # 输入与配置错误
    VALIDATION = "validation"
    CONFIGURATION = "configuration"
    DATA_FORMAT = "data_format"

    # 运行环境错误
    SOURCE_UNAVAILABLE = "source_unavailable"
    TRANSPORT = "transport"
    LIFECYCLE = "lifecycle"

    # 分析错误
    INSUFFICIENT_DATA = "insufficient_data"

    # 系统错误
    SYSTEM = "system"


class ExitCode(IntEnum):
    """命令行退出码（稳定，对外文档化）"""
    OK = 0
    RUN_FAILURES = 1
    CONFIG_ERROR = 2
    SOURCE_UNAVAILABLE = 3
    ANALYSIS_INFEASIBLE = 4


class ApplicationException(Exception):
    """
    应用异常基类

    所有自定义异常都应继承此类
    """

    def __init__(
        self,
        message: str,
        category: ErrorCategory = ErrorCategory.SYSTEM,
        details: Optional[Dict[str, Any]] = None,
        original_error: Optional[Exception] = None
    ):
        self.message = message
        self.category = category
        self.details = details or {}
        self.original_error = original_error

        super().__init__(self.message)

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典（用于结构化日志）"""
        return {
            "error_type": self.__class__.__name__,
            "category": self.category.value,
            "message": self.message,
            "details": self.details,
            "timestamp": datetime.now().isoformat()
        }

    def __str__(self) -> str:
        return f"[{self.category.value.upper()}] {self.message}"


# ========== 实验配置异常 ==========

class ExperimentConfigError(ApplicationException):
    """实验文件 / 测试计划文件错误"""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
        original_error: Optional[Exception] = None
    ):
        details = {"path": str(path) if path else None, "line": line, "column": column}
        super().__init__(
            message,
            category=ErrorCategory.CONFIGURATION,
            details={k: v for k, v in details.items() if v is not None},
            original_error=original_error
        )
        self.path = path
        self.line = line
        self.column = column


class PlanValidationError(ExperimentConfigError):
    """测试计划校验错误（未知占位符、workers/loops 为 0 等）"""
    pass


# ========== 能耗层异常 ==========

class EnergySourceUnavailableError(ApplicationException):
    """能耗计数器不可用（文件缺失、权限不足）"""

    def __init__(self, message: str, path: Optional[str] = None, original_error: Optional[Exception] = None):
        super().__init__(
            message,
            category=ErrorCategory.SOURCE_UNAVAILABLE,
            details={"path": str(path)} if path else {},
            original_error=original_error
        )
        self.path = path


class EnergyAttributionError(ApplicationException):
    """能耗归因输入不一致（时间戳倒退、目标集合不匹配等）"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, category=ErrorCategory.VALIDATION, details=details)


# ========== 负载与编排异常 ==========

class WorkloadTransportError(ApplicationException):
    """负载传输错误：分组首个请求即连接失败"""

    def __init__(self, message: str, group: Optional[str] = None, original_error: Optional[Exception] = None):
        super().__init__(
            message,
            category=ErrorCategory.TRANSPORT,
            details={"group": group} if group else {},
            original_error=original_error
        )


class LifecycleCommandError(ApplicationException):
    """生命周期 shell 命令失败"""

    def __init__(self, message: str, command: str, returncode: Optional[int] = None):
        super().__init__(
            message,
            category=ErrorCategory.LIFECYCLE,
            details={"command": command, "returncode": returncode}
        )
        self.command = command
        self.returncode = returncode


class OrchestrationError(ApplicationException):
    """编排器状态错误（并发运行、输出不可写等）"""

    def __init__(
        self,
        message: str,
        details: Optional[Dict[str, Any]] = None,
        category: ErrorCategory = ErrorCategory.SYSTEM
    ):
        super().__init__(message, category=category, details=details)


class RecordFormatError(ApplicationException):
    """测量 CSV 行格式错误"""

    def __init__(self, message: str, row: Optional[int] = None, path: Optional[str] = None):
        super().__init__(
            message if row is None else f"row {row}: {message}",
            category=ErrorCategory.DATA_FORMAT,
            details={"row": row, "path": str(path) if path else None}
        )
        self.row = row


# ========== 统计与报告异常 ==========

class StatisticsError(ApplicationException):
    """统计计算错误"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, category=ErrorCategory.VALIDATION, details=details)


class InsufficientDataError(StatisticsError):
    """样本量不足"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details=details)
        self.category = ErrorCategory.INSUFFICIENT_DATA


class DegenerateDataError(StatisticsError):
    """退化数据（零方差、全部相同）"""
    pass


class AnalysisInfeasibleError(ApplicationException):
    """分析不可行（分组不足、清洗后样本过少）"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, category=ErrorCategory.INSUFFICIENT_DATA, details=details)


class ReportExportError(ApplicationException):
    """报告导出错误"""

    def __init__(self, message: str, path: Optional[str] = None, original_error: Optional[Exception] = None):
        super().__init__(
            message,
            category=ErrorCategory.SYSTEM,
            details={"path": str(path)} if path else {},
            original_error=original_error
        )


# ========== 错误处理器 ==========

class ErrorHandler:
    """
    错误处理器

    提供统一的错误处理逻辑：
    - 日志记录
    - 退出码映射
    """

    def __init__(self, logger=None):
        """
        初始化错误处理器

        Args:
            logger: structlog 日志记录器
        """
        self.logger = logger or structlog.get_logger(__name__)

    def handle_error(
        self,
        error: Exception,
        context: Dict[str, Any]
    ) -> Dict[str, Any]:
        """
        处理错误并返回结构化响应

        Args:
            error: 异常对象
            context: 错误上下文

        Returns:
            响应字典（包含 exit_code）
        """
        error_type = type(error).__name__
        if isinstance(error, ApplicationException):
            response = error.to_dict()
        else:
            response = {
                "error_type": error_type,
                "category": ErrorCategory.SYSTEM.value,
                "message": str(error),
                "details": {},
                "timestamp": datetime.now().isoformat()
            }

        response["context"] = context
        response["exit_code"] = int(exit_code_for(error))

        self.logger.error(
            "error.handled",
            operation=context.get("operation", "unknown"),
            error_type=error_type,
            category=response["category"],
            message=response["message"],
            **{k: v for k, v in response["details"].items() if v is not None}
        )
        return response

def exit_code_for(error: Exception) -> ExitCode:
    """
    将异常映射为命令行退出码

    Args:
        error: 异常对象

    Returns:
        ExitCode
    """
    if isinstance(error, EnergySourceUnavailableError):
        return ExitCode.SOURCE_UNAVAILABLE
    if isinstance(error, (AnalysisInfeasibleError, StatisticsError)):
        return ExitCode.ANALYSIS_INFEASIBLE
    if isinstance(error, (ExperimentConfigError, RecordFormatError)):
        return ExitCode.CONFIG_ERROR
    if isinstance(error, ApplicationException) and error.category in (
        ErrorCategory.CONFIGURATION,
        ErrorCategory.VALIDATION,
        ErrorCategory.DATA_FORMAT
    ):
        return ExitCode.CONFIG_ERROR
    return ExitCode.RUN_FAILURES
