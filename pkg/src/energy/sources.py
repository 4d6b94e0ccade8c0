"""
系统能耗源

rapl-sysfs 读取 Linux powercap 计数器：
/sys/class/powercap/intel-rapl:<n>/energy_uj 与同级 max_energy_range_uj
"""

import glob
import re
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, List, Optional, Sequence, Tuple, Union

import structlog

from ..core.exceptions import EnergySourceUnavailableError
from ..models.energy_models import EnergyReading, EnergySourceDescriptor, EnergySourceKind
from .clock import MonotonicClock
from .process_accounting import ProcessTreeAccountant

logger = structlog.get_logger(__name__)

POWERCAP_ROOT = "/sys/class/powercap"
_TOP_LEVEL_PACKAGE_RE = re.compile(r"intel-rapl:\d+$")


class EnergySource(ABC):
    """
    能耗源基类

    子类提供 read() 与一个 accountant（CPU 记账），
    prepare() 在每次运行开始前调用
    """

    accountant: Any = None

    @abstractmethod
    def read(self) -> EnergyReading:
        """读取累计能耗"""
        raise NotImplementedError

    def check(self) -> None:
        """可用性检查，不可用时抛出 EnergySourceUnavailableError"""
        self.read()

    def prepare(self, context) -> None:
        """运行开始前的钩子"""
        return None


def discover_rapl_counters(root: Union[str, Path] = POWERCAP_ROOT) -> List[Path]:
    """
    查找顶层 RAPL package 计数器

    子域（intel-rapl:0:0 等）已包含在 package 内，跳过以免重复计数
    """
    paths = []
    for directory in sorted(glob.glob(str(Path(root) / "intel-rapl:*"))):
        if not _TOP_LEVEL_PACKAGE_RE.search(directory):
            continue
        counter = Path(directory) / "energy_uj"
        if counter.exists():
            paths.append(counter)
    return paths


def _read_number(path: Path) -> float:
    try:
        return float(path.read_text().strip())
    except (OSError, ValueError) as e:
        raise EnergySourceUnavailableError(
            f"cannot read energy counter {path}: {e}", path=str(path), original_error=e
        )


class RaplSysfsSource(EnergySource):
    """
    powercap sysfs 能耗源

    读数为所有计数器之和，max_range 同样求和；
    components 保留每个计数器的 (counter, max_range) 以便按域处理回绕
    """

    def __init__(self, counters: Sequence[Union[str, Path]], clock=None, accountant=None):
        self.counters = [Path(p) for p in counters]
        if not self.counters:
            raise EnergySourceUnavailableError("no RAPL counters configured or discovered", path=POWERCAP_ROOT)
        self.clock = clock or MonotonicClock()
        self.accountant = accountant or ProcessTreeAccountant()
        self._ranges: Optional[List[float]] = None

    def _max_ranges(self) -> List[float]:
        if self._ranges is None:
            self._ranges = [
                _read_number(counter.parent / "max_energy_range_uj")
                for counter in self.counters
            ]
        return self._ranges

    def read(self) -> EnergyReading:
        ranges = self._max_ranges()
        components: List[Tuple[float, float]] = [
            (_read_number(counter), max_range)
            for counter, max_range in zip(self.counters, ranges)
        ]
        return EnergyReading(
            counter_uj=sum(c for c, _ in components),
            max_range_uj=sum(r for _, r in components),
            timestamp_ns=self.clock.now_ns(),
            components=components,
        )


def read_system_energy(source: EnergySource) -> EnergyReading:
    """读取系统累计能耗（所有计数器之和）"""
    return source.read()


def create_energy_source(
    descriptor: EnergySourceDescriptor,
    clock=None,
    **simulation_options,
) -> EnergySource:
    """
    按描述创建能耗源

    Args:
        descriptor: [energy] 段
        clock: 时钟（仿真时必须为 VirtualClock）
        **simulation_options: 传给 SimulatedEnergySource 的附加参数

    Returns:
        EnergySource 实例
    """
    if descriptor.kind == EnergySourceKind.RAPL_SYSFS:
        counters = descriptor.counters or discover_rapl_counters()
        logger.debug("energy.rapl_counters", counters=[str(c) for c in counters])
        return RaplSysfsSource(counters, clock=clock)

    from .simulated import SimulatedEnergySource

    return SimulatedEnergySource(descriptor, clock=clock, **simulation_options)
