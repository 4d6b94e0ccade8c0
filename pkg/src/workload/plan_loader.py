"""
测试计划加载与请求计数
"""

from collections import Counter
from pathlib import Path
from typing import Any, Dict, List, Set, Union

import structlog
from pydantic import ValidationError

from ..core.exceptions import PlanValidationError
from ..matrix.experiment_loader import read_toml
from ..models.workload_models import HttpMethod, OperationGroup, TestPlan
from .templating import placeholders

logger = structlog.get_logger(__name__)

# worker 本地的内置占位符
WORKER_VARIABLES = {"worker", "loop", "group", "seq"}


def _step_data(body: Dict[str, Any]) -> Dict[str, Any]:
    data = {
        "method": str(body.get("method", "")).upper(),
        "path_template": body.get("path", body.get("path_template")),
        "body_template": body.get("body", body.get("body_template")),
        "expected_status_class": body.get("expect", "2xx"),
        "delay_s": body.get("delay_s", 0.0),
    }
    capture = body.get("capture")
    if capture is not None:
        data["capture"] = {
            "variable": capture.get("variable"),
            "path": capture.get("field", capture.get("path")),
        }
    return data


def validate_placeholders(plan: TestPlan, plan_variables: Set[str] = frozenset()) -> None:
    """
    检查每个占位符都能在使用前解析

    可用变量：内置 worker 变量、计划级变量以及本组中更早步骤捕获的变量

    Raises:
        PlanValidationError: 未知占位符
    """
    for group in plan.groups:
        known = set(WORKER_VARIABLES) | set(plan_variables)
        for index, step in enumerate(group.steps):
            used = placeholders(step.path_template)
            if step.body_template:
                used |= placeholders(step.body_template)
            missing = used - known
            if missing:
                raise PlanValidationError(
                    f"group {group.name!r} step {index}: unknown placeholder(s) "
                    f"{', '.join('{' + m + '}' for m in sorted(missing))}"
                )
            if step.capture is not None:
                known.add(step.capture.variable)


def load_test_plan(path: Union[str, Path]) -> TestPlan:
    """
    加载测试计划文件

    Args:
        path: TOML 文件（[plan] 与 [[groups]] / [[groups.steps]]）

    Returns:
        校验完成的 TestPlan

    Raises:
        PlanValidationError: 结构错误、workers/loops 为 0 或占位符无法解析
    """
    path = Path(path)
    document = read_toml(path)
    header = document.get("plan", {})
    groups: List[Dict[str, Any]] = []
    for body in document.get("groups", []):
        groups.append({
            "name": body.get("name"),
            "workers": body.get("workers", 1),
            "loops": body.get("loops", 1),
            "steps": [_step_data(step) for step in body.get("steps", [])],
        })

    try:
        plan = TestPlan.model_validate({
            "name": header.get("name", path.stem),
            "base_url_template": header.get("base_url_template", "{base_url}"),
            "groups": groups,
        })
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise PlanValidationError(f"invalid test plan: {problems}", path=path, original_error=e)

    try:
        validate_placeholders(plan)
    except PlanValidationError as e:
        raise PlanValidationError(e.message, path=path)

    logger.debug("plan.loaded", path=str(path), groups=[g.name for g in plan.groups])
    return plan


def group_requests(group: OperationGroup) -> Dict[HttpMethod, int]:
    """单个操作组的请求数"""
    per_loop = Counter(step.method for step in group.steps)
    return {
        method: group.workers * group.loops * per_loop.get(method, 0)
        for method in HttpMethod
    }


def total_requests(plan: TestPlan) -> Dict[HttpMethod, int]:
    """
    计划的逐方法请求总数：Σ workers × loops × 该方法的步骤数

    Returns:
        每个 HttpMethod 的计数（未出现的方法为 0）
    """
    totals = {method: 0 for method in HttpMethod}
    for group in plan.groups:
        for method, count in group_requests(group).items():
            totals[method] += count
    return totals
