"""
配置枚举与运行计划
"""

import itertools
from typing import List, Union

from ..models.experiment_models import (
    Experiment,
    Ordering,
    RunPlan,
    RunPlanEntry,
    StackConfig,
)


def enumerate_configs(experiment: Experiment) -> List[StackConfig]:
    """
    枚举全部有效栈配置

    维度取值的笛卡尔积按兼容性规则过滤；外层循环为第一个声明的维度

    Args:
        experiment: 已校验的实验

    Returns:
        有序配置列表（规则排除一切时为空）
    """
    names = experiment.dimension_names
    configs = []
    for combination in itertools.product(*(d.values for d in experiment.dimensions)):
        assignments = dict(zip(names, combination))
        if all(rule.admits(assignments) for rule in experiment.rules):
            configs.append(StackConfig(assignments=assignments))
    return configs


def build_run_plan(
    configs: List[StackConfig],
    iterations: int,
    ordering: Union[Ordering, str] = Ordering.BLOCKED,
) -> RunPlan:
    """
    构建运行计划

    Args:
        configs: 有效配置
        iterations: 每个配置的迭代次数（>= 1）
        ordering: blocked（同一配置连续）或 round-robin（按迭代轮转）

    Returns:
        RunPlan

    Raises:
        ValueError: iterations < 1 或未知顺序
    """
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    ordering = Ordering(ordering)

    if ordering == Ordering.BLOCKED:
        pairs = [(config, i) for config in configs for i in range(iterations)]
    else:
        pairs = [(config, i) for i in range(iterations) for config in configs]

    entries = [
        RunPlanEntry(index=index, config=config, iteration=iteration)
        for index, (config, iteration) in enumerate(pairs)
    ]
    return RunPlan(entries=entries, iterations_per_config=iterations, ordering=ordering)


def plan_experiment(experiment: Experiment, iterations: int = None, ordering=None) -> RunPlan:
    """按实验（及可选覆盖）构建运行计划"""
    return build_run_plan(
        enumerate_configs(experiment),
        iterations if iterations is not None else experiment.run.iterations,
        ordering if ordering is not None else experiment.run.ordering,
    )
