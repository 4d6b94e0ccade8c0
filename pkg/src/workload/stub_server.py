"""
进程内 HTTP 桩服务（aiohttp）

模拟 petclinic 风格 REST API：POST → 201 {"id": n}，GET → 200，
PUT / DELETE → 204；/actuator/health 在 ready_delay_s 之后返回 200；
支持按 (method, 路径前缀) 注入失败状态码，并记录请求日志
"""

import time
from dataclasses import dataclass
from typing import List, Optional, Tuple

import structlog
from aiohttp import web

logger = structlog.get_logger(__name__)

HEALTH_PATH = "/actuator/health"


@dataclass
class InjectedFailure:
    method: str
    path_prefix: str
    status: int = 500
    remaining: Optional[int] = None

    def matches(self, method: str, path: str) -> bool:
        if self.remaining is not None and self.remaining <= 0:
            return False
        return method == self.method and path.startswith(self.path_prefix)


@dataclass
class LoggedRequest:
    method: str
    path: str
    worker: Optional[str]
    status: int
    created_id: Optional[int] = None


class StubServer:
    """
    桩应用

    Args:
        host: 监听地址
        port: 端口（0 表示随机）
        ready_delay_s: 健康检查变为就绪前的延迟
    """

    def __init__(self, host: str = "127.0.0.1", port: int = 0, ready_delay_s: float = 0.0):
        self.host = host
        self.port = port
        self.ready_delay_s = ready_delay_s
        self.requests: List[LoggedRequest] = []
        self.failures: List[InjectedFailure] = []
        self._next_id = 0
        self._started = None
        self._runner: Optional[web.AppRunner] = None

        self.app = web.Application()
        self.app.router.add_route("*", "/{tail:.*}", self._handle)

    @property
    def url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def inject_failure(self, method: str, path_prefix: str, status: int = 500, times: Optional[int] = None) -> None:
        """对匹配的请求返回指定状态码（times 为 None 时始终生效）"""
        self.failures.append(InjectedFailure(method.upper(), path_prefix, status, times))

    def method_counts(self) -> dict:
        counts = {}
        for entry in self.requests:
            if entry.path == HEALTH_PATH:
                continue
            counts[entry.method] = counts.get(entry.method, 0) + 1
        return counts

    async def start(self) -> "StubServer":
        self._runner = web.AppRunner(self.app)
        await self._runner.setup()
        site = web.TCPSite(self._runner, self.host, self.port)
        await site.start()
        self.port = self._runner.addresses[0][1]
        self._started = time.monotonic()
        logger.debug("stub_server.started", url=self.url)
        return self

    async def stop(self) -> None:
        if self._runner is not None:
            await self._runner.cleanup()
            self._runner = None

    async def __aenter__(self) -> "StubServer":
        return await self.start()

    async def __aexit__(self, *exc) -> None:
        await self.stop()

    def _respond(self, method: str, path: str) -> Tuple[int, Optional[dict]]:
        if path == HEALTH_PATH:
            ready = time.monotonic() - self._started >= self.ready_delay_s
            return (200, {"status": "UP"}) if ready else (503, {"status": "DOWN"})

        for failure in self.failures:
            if failure.matches(method, path):
                if failure.remaining is not None:
                    failure.remaining -= 1
                return failure.status, {"error": "injected"}

        if method == "POST":
            self._next_id += 1
            return 201, {"id": self._next_id}
        if method == "GET":
            return 200, {"path": path}
        if method in ("PUT", "DELETE"):
            return 204, None
        return 405, None

    async def _handle(self, request: web.Request) -> web.Response:
        if request.can_read_body:
            await request.read()
        status, payload = self._respond(request.method, request.path)
        created = payload.get("id") if request.method == "POST" and status == 201 else None
        self.requests.append(
            LoggedRequest(request.method, request.path, request.headers.get("X-Wattbench-Worker"), status, created)
        )
        if payload is None:
            return web.Response(status=status)
        return web.json_response(payload, status=status)
