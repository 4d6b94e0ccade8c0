"""
进程树 CPU 记账（基于 psutil，读取 /proc/<pid>/stat 与 /proc/stat）

单位为 CPU 秒：目标为进程树 user+system（含已回收子进程），
整机为除 idle、iowait 与 guest 外的全部 CPU 时间之和
"""

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import psutil
import structlog

logger = structlog.get_logger(__name__)

# guest / guest_nice 已计入 user / nice
_EXCLUDED_FIELDS = ("idle", "iowait", "guest", "guest_nice")


def host_busy_seconds() -> float:
    """整机累计忙碌 CPU 秒（所有 CPU 求和）"""
    times = psutil.cpu_times()
    return sum(
        value for name, value in times._asdict().items()
        if name not in _EXCLUDED_FIELDS
    )


def _process_seconds(process: psutil.Process) -> Tuple[float, float]:
    """(自身 user+system, 已回收子进程 user+system)"""
    times = process.cpu_times()
    return times.user + times.system, times.children_user + times.children_system


@dataclass
class _TreeState:
    # pid → (自身, 已回收子进程)
    last: Dict[int, Tuple[float, float]] = field(default_factory=dict)
    # 已离开进程树、尚未被树内父进程回收的 CPU 秒
    pending: float = 0.0
    total: float = 0.0


class ProcessTreeAccountant:
    """
    目标进程树的 CPU 记账

    存活进程各计 自身 + 已回收子进程，每个 CPU 秒只计一次：
    子进程被树内父进程回收后，其时间出现在父进程的 children 字段里。
    已消失但还未出现在任何父进程 children 中的进程记入 pending，
    被回收时从 pending 中扣除；孤儿进程的时间一直留在 pending。
    累计值单调不减；根进程消失后目标被标记为 dead，计数冻结
    """

    def __init__(self):
        self._trees: Dict[str, _TreeState] = {}
        self._dead: Dict[str, float] = {}

    def _tree_seconds(self, target: str, pid: int) -> Optional[float]:
        state = self._trees.setdefault(target, _TreeState())
        try:
            root = psutil.Process(pid)
            processes = [root] + root.children(recursive=True)
        except (psutil.NoSuchProcess, psutil.ZombieProcess):
            return None
        except psutil.AccessDenied:
            logger.warning("accounting.access_denied", target=target, pid=pid)
            return None

        current: Dict[int, Tuple[float, float]] = {}
        for process in processes:
            try:
                current[process.pid] = _process_seconds(process)
            except psutil.AccessDenied:
                # 仍存在但不可读：沿用上次的值
                if process.pid in state.last:
                    current[process.pid] = state.last[process.pid]
            except (psutil.NoSuchProcess, psutil.ZombieProcess):
                continue

        departed = sum(own + reaped for p, (own, reaped) in state.last.items() if p not in current)
        absorbed = sum(
            max(0.0, current[p][1] - state.last[p][1]) for p in current if p in state.last
        )
        state.pending = max(0.0, state.pending + departed - absorbed)
        state.last = current

        alive = sum(own + reaped for own, reaped in current.values())
        state.total = max(state.total, alive + state.pending)
        return state.total

    def snapshot(self, targets: Mapping[str, Optional[int]]) -> Tuple[Dict[str, float], float, List[str]]:
        """
        读取一次快照

        Args:
            targets: 目标 id → 根进程 pid

        Returns:
            (目标累计 CPU 秒, 整机累计忙碌 CPU 秒, 已退出目标)
        """
        ticks: Dict[str, float] = {}
        for target, pid in targets.items():
            if target in self._dead:
                ticks[target] = self._dead[target]
                continue
            value = self._tree_seconds(target, pid) if pid is not None else None
            if value is None:
                state = self._trees.get(target)
                frozen = state.total if state else 0.0
                self._dead[target] = frozen
                logger.info("accounting.target_exited", target=target, pid=pid)
                ticks[target] = frozen
            else:
                ticks[target] = value
        total = host_busy_seconds()
        return ticks, total, sorted(self._dead)
