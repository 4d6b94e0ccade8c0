"""
工作负载测试
测试测试计划加载、请求计数、HTTP 执行与就绪探测
"""

import textwrap
from pathlib import Path

import httpx
import pytest

from src.core.exceptions import PlanValidationError, WorkloadTransportError
from src.models.workload_models import HttpMethod, ReadinessProbe, StatusClass
from src.workload.plan_loader import load_test_plan, total_requests
from src.workload.readiness import probe_ready
from src.workload.runner import extract_field, execute_plan
from src.workload.stub_server import StubServer
from src.workload.templating import TemplateError, placeholders, render

EXPERIMENTS = Path(__file__).parent.parent / "experiments"


def write_plan(directory: Path, body: str) -> Path:
    path = directory / "plan.toml"
    path.write_text(textwrap.dedent(body), encoding="utf-8")
    return path


SMALL_PLAN = """
    [plan]
    name = "small"

    [[groups]]
    name = "owners"
    workers = 2
    loops = 3

    [[groups.steps]]
    method = "POST"
    path = "/api/owners"
    body = '{"name": "w{worker}"}'
    capture = { variable = "ownerId", field = "id" }

    [[groups.steps]]
    method = "GET"
    path = "/api/owners/{ownerId}"

    [[groups.steps]]
    method = "DELETE"
    path = "/api/owners/{ownerId}"
"""


# ==================== 夹具 ====================

@pytest.fixture
def reference_plan():
    """参考测试计划"""
    return load_test_plan(EXPERIMENTS / "petclinic-plan.toml")


@pytest.fixture
def small_plan(tmp_path):
    """小型测试计划：2 workers × 3 loops"""
    return load_test_plan(write_plan(tmp_path, SMALL_PLAN))


# ==================== 模板测试 ====================

class TestTemplating:
    """占位符模板测试"""

    def test_render(self):
        """测试：替换占位符"""
        assert render("/owners/{id}?v={v}", {"id": 7, "v": "x"}) == "/owners/7?v=x"

    def test_shell_variables_untouched(self):
        """测试：${VAR} 原样保留"""
        assert render("echo ${HOME} {name}", {"name": "a"}) == "echo ${HOME} a"
        assert placeholders("${HOME} {name}") == {"name"}

    def test_json_braces_are_not_placeholders(self):
        """测试：JSON 花括号不视为占位符"""
        assert placeholders('{"id": 1, "name": "{pet}"}') == {"pet"}

    def test_unknown_placeholder(self):
        """测试：未定义变量报错"""
        with pytest.raises(TemplateError):
            render("/owners/{id}", {})


# ==================== 测试计划测试 ====================

class TestPlanLoader:
    """测试计划加载测试"""

    def test_reference_totals(self, reference_plan):
        """测试：参考计划为 5500/2000/2000/2000"""
        totals = total_requests(reference_plan)

        assert totals == {
            HttpMethod.GET: 5500,
            HttpMethod.POST: 2000,
            HttpMethod.PUT: 2000,
            HttpMethod.DELETE: 2000,
        }
        assert sum(totals.values()) == 11500

    def test_reference_groups(self, reference_plan):
        """测试：参考计划的四个操作组"""
        assert [g.name for g in reference_plan.groups] == ["owners", "pets", "visits", "vets"]
        assert all(g.workers == 5 and g.loops == 100 for g in reference_plan.groups)

    def test_step_defaults(self, small_plan):
        """测试：步骤默认期望 2xx"""
        step = small_plan.groups[0].steps[1]

        assert step.method == HttpMethod.GET
        assert step.expected_status_class == StatusClass.SUCCESS
        assert small_plan.groups[0].steps[0].capture.variable == "ownerId"

    def test_zero_workers(self, tmp_path):
        """测试：workers 为 0 报错"""
        path = write_plan(tmp_path, """
            [[groups]]
            name = "g"
            workers = 0
            loops = 1

            [[groups.steps]]
            method = "GET"
            path = "/"
        """)

        with pytest.raises(PlanValidationError, match="workers"):
            load_test_plan(path)

    def test_placeholder_before_capture(self, tmp_path):
        """测试：占位符在捕获之前使用报错"""
        path = write_plan(tmp_path, """
            [[groups]]
            name = "g"
            workers = 1
            loops = 1

            [[groups.steps]]
            method = "GET"
            path = "/owners/{ownerId}"

            [[groups.steps]]
            method = "POST"
            path = "/owners"
            capture = { variable = "ownerId", field = "id" }
        """)

        with pytest.raises(PlanValidationError, match="ownerId"):
            load_test_plan(path)

    def test_captures_are_group_local(self, tmp_path):
        """测试：捕获变量不跨组"""
        path = write_plan(tmp_path, """
            [[groups]]
            name = "a"
            workers = 1
            loops = 1

            [[groups.steps]]
            method = "POST"
            path = "/owners"
            capture = { variable = "ownerId", field = "id" }

            [[groups]]
            name = "b"
            workers = 1
            loops = 1

            [[groups.steps]]
            method = "GET"
            path = "/owners/{ownerId}"
        """)

        with pytest.raises(PlanValidationError):
            load_test_plan(path)

    def test_unknown_method(self, tmp_path):
        """测试：未知 HTTP 方法"""
        path = write_plan(tmp_path, """
            [[groups]]
            name = "g"
            workers = 1
            loops = 1

            [[groups.steps]]
            method = "PATCH"
            path = "/"
        """)

        with pytest.raises(PlanValidationError):
            load_test_plan(path)

    def test_extract_field(self):
        """测试：点分路径取字段"""
        payload = {"data": {"items": [{"id": 4}]}}

        assert extract_field(payload, "data.items.0.id") == 4
        with pytest.raises(KeyError):
            extract_field(payload, "data.missing")


# ==================== 执行测试 ====================

class TestExecutePlan:
    """HTTP 执行测试"""

    @pytest.mark.asyncio
    async def test_small_plan_counts(self, small_plan):
        """测试：执行计数等于计划总数，捕获的 id 被使用"""
        async with StubServer() as server:
            summary = await execute_plan(small_plan, server.url)

        assert summary.counts[HttpMethod.POST] == 6
        assert summary.counts[HttpMethod.GET] == 6
        assert summary.counts[HttpMethod.DELETE] == 6
        assert summary.error_count == 0
        assert summary.wall_runtime_s > 0
        assert server.method_counts() == {"POST": 6, "GET": 6, "DELETE": 6}
        owner_paths = {r.path for r in server.requests if r.method == "GET"}
        assert owner_paths == {f"/api/owners/{i}" for i in range(1, 7)}
        assert {r.worker for r in server.requests} == {"owners/0", "owners/1"}

    @pytest.mark.asyncio
    async def test_reference_plan_counts(self, reference_plan):
        """测试：参考计划在桩服务上执行 5500/2000/2000/2000"""
        async with StubServer() as server:
            summary = await execute_plan(reference_plan, server.url)

        assert summary.counts == total_requests(reference_plan)
        assert summary.error_count == 0
        assert server.method_counts() == {"GET": 5500, "POST": 2000, "PUT": 2000, "DELETE": 2000}

    @pytest.mark.asyncio
    async def test_error_status_does_not_abort(self, small_plan):
        """测试：非 2xx 响应计为错误但不中止"""
        async with StubServer() as server:
            server.inject_failure("DELETE", "/api/owners", status=500, times=1)
            summary = await execute_plan(small_plan, server.url)

        assert summary.error_count == 1
        assert summary.total_requests == 18

    @pytest.mark.asyncio
    async def test_failed_capture_counts_dependents(self, small_plan):
        """测试：捕获失败时依赖它的请求计为错误"""
        async with StubServer() as server:
            server.inject_failure("POST", "/api/owners", status=500)
            summary = await execute_plan(small_plan, server.url)

        # 6 个 POST 失败，12 个依赖请求无法构造
        assert summary.error_count == 18
        assert summary.total_requests == 18
        assert server.method_counts() == {"POST": 6}

    @pytest.mark.asyncio
    async def test_transport_abort(self, small_plan):
        """测试：无法连接时中止"""
        server = await StubServer().start()
        url = server.url
        await server.stop()

        with pytest.raises(WorkloadTransportError):
            await execute_plan(small_plan, url, timeout_s=2.0)

    @pytest.mark.asyncio
    async def test_mock_transport(self, small_plan):
        """测试：注入 httpx MockTransport"""
        def handler(request: httpx.Request) -> httpx.Response:
            if request.method == "POST":
                return httpx.Response(201, json={"id": 42})
            return httpx.Response(200)

        async with httpx.AsyncClient(transport=httpx.MockTransport(handler)) as client:
            summary = await execute_plan(small_plan, "http://app.test", client=client)

        assert summary.total_requests == 18
        assert summary.error_count == 0

    @pytest.mark.asyncio
    async def test_captures_stay_within_worker(self, tmp_path):
        """测试：每个 worker 只使用自己创建的 id"""
        plan = load_test_plan(write_plan(tmp_path, SMALL_PLAN.replace("workers = 2", "workers = 4")))
        async with StubServer() as server:
            summary = await execute_plan(plan, server.url)

        assert summary.error_count == 0
        for worker in {r.worker for r in server.requests}:
            own = [r for r in server.requests if r.worker == worker]
            created = {r.created_id for r in own if r.method == "POST"}
            used = {int(r.path.rsplit("/", 1)[1]) for r in own if r.method in ("GET", "DELETE")}
            assert len(created) == 3
            assert used == created

    @pytest.mark.asyncio
    async def test_undecodable_response_counts_as_error(self, small_plan):
        """测试：响应体解码失败计为错误，执行继续"""
        def handler(request: httpx.Request) -> httpx.Response:
            if request.method == "DELETE":
                return httpx.Response(200, headers={"content-encoding": "gzip"}, content=b"not gzip at all")
            if request.method == "POST":
                return httpx.Response(201, json={"id": 7})
            return httpx.Response(200)

        async with httpx.AsyncClient(transport=httpx.MockTransport(handler)) as client:
            summary = await execute_plan(small_plan, "http://app.test", client=client)

        assert summary.total_requests == 18
        assert summary.error_count == 6

    @pytest.mark.asyncio
    async def test_redirect_loop_counts_as_error(self, small_plan):
        """测试：重定向过多计为错误"""
        def handler(request: httpx.Request) -> httpx.Response:
            if request.method == "GET":
                return httpx.Response(302, headers={"location": str(request.url)})
            if request.method == "POST":
                return httpx.Response(201, json={"id": 7})
            return httpx.Response(204)

        async with httpx.AsyncClient(
            transport=httpx.MockTransport(handler), follow_redirects=True, max_redirects=3
        ) as client:
            summary = await execute_plan(small_plan, "http://app.test", client=client)

        assert summary.total_requests == 18
        assert summary.error_count == 6


# ==================== 就绪探测测试 ====================

class TestReadiness:
    """就绪探测测试"""

    @pytest.mark.asyncio
    async def test_becomes_ready(self):
        """测试：延迟就绪"""
        async with StubServer(ready_delay_s=0.5) as server:
            probe = ReadinessProbe(url=f"{server.url}/actuator/health", timeout_s=5.0, poll_interval_s=0.1)
            outcome = await probe_ready(probe)

        assert outcome.ready
        assert 0.4 <= outcome.waited_s < 3.0
        assert outcome.attempts > 1
        assert outcome.last_status == 200

    @pytest.mark.asyncio
    async def test_timeout(self):
        """测试：超时返回 ready=False"""
        async with StubServer(ready_delay_s=60.0) as server:
            probe = ReadinessProbe(url=f"{server.url}/actuator/health", timeout_s=0.5, poll_interval_s=0.1)
            outcome = await probe_ready(probe)

        assert not outcome.ready
        assert outcome.waited_s >= 0.45
        assert outcome.last_status == 503

    @pytest.mark.asyncio
    async def test_unreachable(self):
        """测试：连接失败持续重试直到超时"""
        server = await StubServer().start()
        url = server.url
        await server.stop()

        outcome = await probe_ready(ReadinessProbe(url=f"{url}/actuator/health", timeout_s=0.3, poll_interval_s=0.1))

        assert not outcome.ready
        assert outcome.last_status is None

    def test_probe_timing_validation(self):
        """测试：超时短于轮询间隔报错"""
        with pytest.raises(ValueError):
            ReadinessProbe(url="http://x", timeout_s=0.1, poll_interval_s=1.0)


if __name__ == "__main__":
    pytest.main([__file__, "-v", "--tb=short"])
