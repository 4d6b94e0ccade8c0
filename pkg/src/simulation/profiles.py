"""
仿真偏移解析

偏移键可以是完整配置 id，也可以是 'dim=value' 选择器；
精确 id 优先，否则所有匹配选择器的偏移相加
"""

from typing import Dict, Iterable, List, Mapping

from ..models.experiment_models import Dimension, StackConfig


def _selector(key: str):
    name, sep, value = key.partition("=")
    if not sep:
        return None
    return name, value


def undeclared_offset_keys(keys: Iterable[str], dimensions: List[Dimension]) -> List[str]:
    """
    返回无法匹配任何已声明配置或维度取值的键

    Args:
        keys: 偏移键
        dimensions: 实验维度

    Returns:
        未声明的键（按输入顺序）
    """
    by_name = {d.name: d for d in dimensions}
    bad = []
    for key in keys:
        try:
            StackConfig.parse_id(key, dimensions)
            continue
        except ValueError:
            pass
        selector = _selector(key)
        if selector is None:
            bad.append(key)
            continue
        name, value = selector
        dimension = by_name.get(name)
        if dimension is None or value not in dimension.values:
            bad.append(key)
    return bad


def resolve_offset(offsets: Mapping[str, float], config: StackConfig) -> float:
    """某个配置的相对偏移"""
    if config.id in offsets:
        return float(offsets[config.id])
    total = 0.0
    for key, offset in offsets.items():
        selector = _selector(key)
        if selector is None:
            continue
        name, value = selector
        if config.assignments.get(name) == value:
            total += float(offset)
    return total


def merge_offsets(*layers: Mapping[str, float]) -> Dict[str, float]:
    """后面的层覆盖前面的层"""
    merged: Dict[str, float] = {}
    for layer in layers:
        merged.update(layer)
    return merged
