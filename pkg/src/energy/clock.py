"""
时钟抽象

MonotonicClock 用于真实测量；VirtualClock 用于仿真，
按固定步长推进并通知订阅者（采样器订阅而不是自己计时）
"""

import asyncio
import time
from datetime import datetime, timedelta, timezone
from typing import Callable, List

VIRTUAL_EPOCH = datetime(2025, 1, 1, tzinfo=timezone.utc)


class MonotonicClock:
    """真实单调时钟"""

    virtual = False

    def now(self) -> float:
        return time.monotonic()

    def now_ns(self) -> int:
        return time.monotonic_ns()

    def wall_time(self) -> datetime:
        return datetime.now(timezone.utc)

    async def sleep(self, seconds: float) -> None:
        if seconds > 0:
            await asyncio.sleep(seconds)


class VirtualClock:
    """
    虚拟时钟

    Args:
        step_s: advance() 的推进步长（秒）
        start: 初始时刻
    """

    virtual = True

    def __init__(self, step_s: float = 0.1, start: float = 0.0):
        if step_s <= 0:
            raise ValueError("step_s must be positive")
        self.step_s = step_s
        self._now = float(start)
        self._listeners: List[Callable[[float], None]] = []

    def now(self) -> float:
        return self._now

    def now_ns(self) -> int:
        return int(round(self._now * 1e9))

    def wall_time(self) -> datetime:
        return VIRTUAL_EPOCH + timedelta(seconds=self._now)

    def subscribe(self, listener: Callable[[float], None]) -> None:
        self._listeners.append(listener)

    def unsubscribe(self, listener: Callable[[float], None]) -> None:
        if listener in self._listeners:
            self._listeners.remove(listener)

    def jump_to(self, moment: float) -> None:
        """直接设置时刻，不通知订阅者"""
        self._now = float(moment)

    def advance(self, seconds: float) -> None:
        """按步长推进 seconds 秒，每步通知订阅者；最后一步落在精确终点"""
        if seconds < 0:
            raise ValueError("cannot advance a clock backwards")
        origin = self._now
        steps = int(seconds // self.step_s)
        end = origin + seconds
        for k in range(1, steps + 1):
            moment = origin + k * self.step_s
            if moment >= end:
                break
            self._now = moment
            self._notify()
        if self._now != end:
            self._now = end
            self._notify()

    async def sleep(self, seconds: float) -> None:
        if seconds > 0:
            self.advance(seconds)

    def _notify(self) -> None:
        for listener in list(self._listeners):
            listener(self._now)
