"""
HTTP 工作负载执行器

操作组按声明顺序依次执行；组内 workers 个 worker 并发，
每个 worker 循环 loops 次步骤序列，捕获变量只在 worker 内可见
"""

import asyncio
import time
from collections import Counter
from datetime import datetime, timezone
from typing import Any, Dict, Optional

import httpx
import structlog

from ..core.exceptions import WorkloadTransportError
from ..models.workload_models import HttpMethod, HttpStep, OperationGroup, TestPlan, WorkloadSummary
from .templating import TemplateError, render

logger = structlog.get_logger(__name__)

WORKER_HEADER = "X-Wattbench-Worker"


def extract_field(payload: Any, dotted_path: str) -> Any:
    """按点分路径取 JSON 字段（数字段作为列表下标）"""
    current = payload
    for part in dotted_path.split("."):
        if isinstance(current, list) and part.isdigit():
            current = current[int(part)]
        elif isinstance(current, dict):
            current = current[part]
        else:
            raise KeyError(part)
    return current


class _Tally:
    """组内 worker 共享的计数器（事件循环内无需加锁）"""

    def __init__(self):
        self.counts: Counter = Counter()
        self.errors = 0


class WorkloadRunner:
    """
    测试计划执行器

    Args:
        timeout_s: 单请求超时
        client: 可注入的 httpx.AsyncClient（测试可使用 MockTransport）
    """

    def __init__(self, timeout_s: float = 30.0, client: Optional[httpx.AsyncClient] = None):
        self.timeout_s = timeout_s
        self._client = client

    async def execute(self, plan: TestPlan, base_url: str) -> WorkloadSummary:
        """
        执行测试计划

        Args:
            plan: 已校验的测试计划
            base_url: 被测应用基础 URL

        Returns:
            WorkloadSummary

        Raises:
            WorkloadTransportError: 某个 worker 在组内首个请求即无法连接
        """
        root = render(plan.base_url_template, {"base_url": base_url}).rstrip("/")
        started_at = datetime.now(timezone.utc)
        start = time.perf_counter()
        tally = _Tally()

        owns_client = self._client is None
        client = self._client or httpx.AsyncClient(timeout=self.timeout_s)
        try:
            for group in plan.groups:
                await self._run_group(client, group, root, tally)
        finally:
            if owns_client:
                await client.aclose()

        elapsed = max(time.perf_counter() - start, 1e-9)
        summary = WorkloadSummary(
            counts={method: tally.counts.get(method, 0) for method in HttpMethod},
            error_count=tally.errors,
            wall_runtime_s=elapsed,
            started_at=started_at,
            ended_at=datetime.now(timezone.utc),
        )
        logger.info(
            "workload.finished",
            plan=plan.name,
            requests=summary.total_requests,
            errors=summary.error_count,
            runtime_s=round(elapsed, 3),
        )
        return summary

    async def _run_group(self, client, group: OperationGroup, root: str, tally: _Tally) -> None:
        workers = [
            self._run_worker(client, group, worker, root, tally)
            for worker in range(group.workers)
        ]
        results = await asyncio.gather(*workers, return_exceptions=True)
        for result in results:
            if isinstance(result, BaseException):
                raise result

    async def _run_worker(
        self,
        client: httpx.AsyncClient,
        group: OperationGroup,
        worker: int,
        root: str,
        tally: _Tally,
    ) -> None:
        variables: Dict[str, Any] = {"worker": worker, "group": group.name}
        headers = {WORKER_HEADER: f"{group.name}/{worker}"}
        seq = 0
        for loop in range(group.loops):
            variables["loop"] = loop
            for step in group.steps:
                variables["seq"] = seq
                first_request = seq == 0
                seq += 1
                await self._request(client, step, variables, headers, root, tally, first_request, group.name)
                if step.delay_s > 0:
                    await asyncio.sleep(step.delay_s)

    async def _request(
        self,
        client: httpx.AsyncClient,
        step: HttpStep,
        variables: Dict[str, Any],
        headers: Dict[str, str],
        root: str,
        tally: _Tally,
        first_request: bool,
        group_name: str,
    ) -> None:
        tally.counts[step.method] += 1
        try:
            url = root + render(step.path_template, variables)
            body = render(step.body_template, variables) if step.body_template else None
        except TemplateError as e:
            # 前序捕获失败，请求无法构造
            tally.errors += 1
            logger.debug("workload.unresolved", error=str(e))
            return

        request_headers = dict(headers)
        if body is not None:
            request_headers["Content-Type"] = "application/json"
        try:
            response = await client.request(step.method.value, url, content=body, headers=request_headers)
        except httpx.RequestError as e:
            if first_request and isinstance(e, (httpx.ConnectError, httpx.ConnectTimeout)):
                raise WorkloadTransportError(
                    f"cannot connect to {url}: {e}", group=group_name, original_error=e
                )
            # 解码失败、重定向过多等都计为错误
            tally.errors += 1
            logger.debug("workload.request_failed", url=url, error=type(e).__name__)
            return

        if not step.expected_status_class.accepts(response.status_code):
            tally.errors += 1
            return

        if step.capture is not None:
            try:
                variables[step.capture.variable] = extract_field(response.json(), step.capture.path)
            except (ValueError, KeyError, IndexError, TypeError):
                variables.pop(step.capture.variable, None)
                tally.errors += 1


async def execute_plan(
    plan: TestPlan,
    base_url: str,
    timeout_s: float = 30.0,
    client: Optional[httpx.AsyncClient] = None,
) -> WorkloadSummary:
    """执行测试计划（WorkloadRunner 的便捷入口）"""
    return await WorkloadRunner(timeout_s=timeout_s, client=client).execute(plan, base_url)
