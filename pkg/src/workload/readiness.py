"""
就绪探测：轮询 URL 直到返回期望状态码或超时
"""

import asyncio
import time
from typing import Optional

import httpx
import structlog

from ..models.workload_models import ProbeOutcome, ReadinessProbe

logger = structlog.get_logger(__name__)


async def probe_ready(probe: ReadinessProbe, client: Optional[httpx.AsyncClient] = None) -> ProbeOutcome:
    """
    轮询就绪探测

    Args:
        probe: 探测定义
        client: 可注入的 httpx.AsyncClient

    Returns:
        ProbeOutcome；超时返回 ready=False 而不是抛出异常
    """
    owns_client = client is None
    client = client or httpx.AsyncClient(timeout=max(probe.poll_interval_s, 1.0))
    start = time.monotonic()
    attempts = 0
    last_status = None
    try:
        while True:
            attempts += 1
            try:
                response = await client.get(probe.url)
                last_status = response.status_code
                if response.status_code == probe.expected_status:
                    waited = time.monotonic() - start
                    logger.debug("probe.ready", url=probe.url, waited_s=round(waited, 3), attempts=attempts)
                    return ProbeOutcome(ready=True, waited_s=waited, attempts=attempts, last_status=last_status)
            except httpx.HTTPError:
                last_status = None

            elapsed = time.monotonic() - start
            remaining = probe.timeout_s - elapsed
            if remaining <= 0:
                break
            await asyncio.sleep(min(probe.poll_interval_s, remaining))
            if time.monotonic() - start >= probe.timeout_s:
                break
    finally:
        if owns_client:
            await client.aclose()

    waited = time.monotonic() - start
    logger.warning("probe.timeout", url=probe.url, waited_s=round(waited, 3), last_status=last_status)
    return ProbeOutcome(ready=False, waited_s=waited, attempts=attempts, last_status=last_status)
