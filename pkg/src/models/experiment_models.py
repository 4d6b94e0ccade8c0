"""
实验矩阵数据模型
定义维度、兼容性规则、栈配置与运行计划
"""

import re
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Set

from pydantic import BaseModel, Field, field_validator, model_validator

from .energy_models import EnergySourceDescriptor
from .measurement_models import RunLifecycle


IDENTIFIER_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")
_UNSAFE_ID_CHARS = re.compile(r"[/\s]")


def sanitize_value(value: str) -> str:
    """配置 id 中的值：'/' 与空白替换为 '-'"""
    return _UNSAFE_ID_CHARS.sub("-", value)


class Ordering(str, Enum):
    """运行顺序"""
    BLOCKED = "blocked"
    ROUND_ROBIN = "round-robin"


class Dimension(BaseModel):
    """
    实验维度（自变量）

    例如 framework 版本、runtime 版本、虚拟线程开关
    """
    name: str = Field(..., description="维度名称（标识符）")
    values: List[str] = Field(..., min_length=1, description="有序取值列表")
    variables: Dict[str, Dict[str, str]] = Field(
        default_factory=dict,
        description="每个取值的替换变量 {value: {key: string}}"
    )

    @field_validator("name")
    @classmethod
    def validate_name(cls, v):
        if not IDENTIFIER_RE.match(v):
            raise ValueError(f"dimension name {v!r} is not an identifier")
        return v

    @field_validator("values")
    @classmethod
    def validate_values(cls, v):
        if len(set(v)) != len(v):
            raise ValueError("dimension values must be pairwise distinct")
        sanitized = [sanitize_value(x) for x in v]
        if len(set(sanitized)) != len(sanitized):
            raise ValueError("dimension values collide after id sanitization")
        if any(not x for x in v):
            raise ValueError("dimension values must be non-empty")
        return v

    @model_validator(mode="after")
    def validate_variables(self):
        unknown = set(self.variables) - set(self.values)
        if unknown:
            raise ValueError(
                f"variables declared for unknown values of {self.name!r}: {sorted(unknown)}"
            )
        return self

    def variables_for(self, value: str) -> Dict[str, str]:
        """取值对应的替换变量（含隐式变量 <name>=value）"""
        variables = {self.name: value}
        variables.update(self.variables.get(value, {}))
        return variables

    @property
    def variable_names(self) -> Set[str]:
        names = {self.name}
        for mapping in self.variables.values():
            names.update(mapping)
        return names


class CompatibilityRule(BaseModel):
    """兼容性规则（白名单）：dimension_a=value_a 时 dimension_b 只能取 allowed_values_b"""
    dimension_a: str = Field(..., description="条件维度")
    value_a: str = Field(..., description="条件取值")
    dimension_b: str = Field(..., description="受约束维度")
    allowed_values_b: List[str] = Field(..., description="允许的取值")

    def admits(self, assignments: Dict[str, str]) -> bool:
        """规则是否接受该组合（不适用的规则总是接受）"""
        if assignments.get(self.dimension_a) != self.value_a:
            return True
        return assignments.get(self.dimension_b) in self.allowed_values_b


class StackConfig(BaseModel):
    """栈配置：每个维度恰好一个取值"""
    assignments: Dict[str, str] = Field(..., description="维度 → 取值（按声明顺序）")

    model_config = {"frozen": True}

    @property
    def id(self) -> str:
        """规范 id：'name=value' 以 '_' 连接"""
        return "_".join(
            f"{name}={sanitize_value(value)}"
            for name, value in self.assignments.items()
        )

    def __hash__(self) -> int:
        return hash(self.id)

    def __eq__(self, other) -> bool:
        if not isinstance(other, StackConfig):
            return NotImplemented
        return list(self.assignments.items()) == list(other.assignments.items())

    def __str__(self) -> str:
        return self.id

    @classmethod
    def parse_id(cls, config_id: str, dimensions: List[Dimension]) -> "StackConfig":
        """
        解析配置 id

        Args:
            config_id: 规范 id
            dimensions: 按声明顺序的维度

        Returns:
            StackConfig（取值映射回声明的原始取值）
        """
        assignments: Dict[str, str] = {}
        rest = config_id
        for index, dimension in enumerate(dimensions):
            prefix = f"{dimension.name}="
            if not rest.startswith(prefix):
                raise ValueError(f"config id {config_id!r} lacks dimension {dimension.name!r}")
            rest = rest[len(prefix):]
            if index + 1 < len(dimensions):
                separator = f"_{dimensions[index + 1].name}="
                cut = rest.find(separator)
                if cut < 0:
                    raise ValueError(
                        f"config id {config_id!r} lacks dimension {dimensions[index + 1].name!r}"
                    )
                raw, rest = rest[:cut], rest[cut + 1:]
            else:
                raw, rest = rest, ""

            lookup = {sanitize_value(v): v for v in dimension.values}
            if raw not in lookup:
                raise ValueError(f"unknown value {raw!r} for dimension {dimension.name!r}")
            assignments[dimension.name] = lookup[raw]

        return cls(assignments=assignments)


class RunPlanEntry(BaseModel):
    """运行计划条目"""
    index: int = Field(..., ge=0, description="计划内位置")
    config: StackConfig
    iteration: int = Field(..., ge=0, description="0 起始迭代序号")

    @property
    def key(self):
        return (self.config.id, self.iteration)


class RunPlan(BaseModel):
    """运行计划：每个有效配置出现 iterations_per_config 次"""
    entries: List[RunPlanEntry] = Field(default_factory=list)
    iterations_per_config: int = Field(..., ge=1)
    ordering: Ordering = Ordering.BLOCKED

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def config_count(self) -> int:
        return len({entry.config.id for entry in self.entries})


class RunSettings(BaseModel):
    """[run] 段中的计划参数（冷却、重试、错误率阈值归入 RunLifecycle）"""
    iterations: int = Field(default=100, description="每个配置的迭代次数")
    ordering: Ordering = Ordering.BLOCKED

    @field_validator("iterations")
    @classmethod
    def validate_iterations(cls, v):
        if v < 1:
            raise ValueError("iterations must be >= 1")
        return v


class SimulationProfile(BaseModel):
    """仿真配置档：按配置 id 或 'dim=value' 选择器给出相对偏移"""
    power_offsets: Dict[str, float] = Field(default_factory=dict)
    runtime_offsets: Dict[str, float] = Field(default_factory=dict)


class SimulationSettings(BaseModel):
    """[simulation] 段"""
    base_runtime_s: float = Field(default=60.0, gt=0, description="虚拟基准运行时间")
    runtime_noise: float = Field(default=0.01, ge=0, description="运行时间相对噪声幅度")
    startup_s: float = Field(default=5.0, ge=0, description="虚拟启动时间")
    profiles: Dict[str, SimulationProfile] = Field(default_factory=dict)


class Experiment(BaseModel):
    """完整校验后的实验定义"""
    name: str = Field(default="experiment")
    description: Optional[str] = None
    host: Optional[str] = Field(None, description="测量主机标签")
    dimensions: List[Dimension] = Field(..., min_length=1)
    rules: List[CompatibilityRule] = Field(default_factory=list)
    run: RunSettings = Field(default_factory=RunSettings)
    lifecycle: RunLifecycle = Field(default_factory=RunLifecycle)
    workload_plan: Optional[Path] = Field(None, description="测试计划文件（已解析为绝对路径）")
    energy: EnergySourceDescriptor
    simulation: SimulationSettings = Field(default_factory=SimulationSettings)
    source_path: Optional[Path] = None

    @property
    def iterations(self) -> int:
        return self.run.iterations

    def dimension(self, name: str) -> Dimension:
        for dimension in self.dimensions:
            if dimension.name == name:
                return dimension
        raise KeyError(name)

    @property
    def dimension_names(self) -> List[str]:
        return [d.name for d in self.dimensions]

    def valid_for(self, assignments: Dict[str, str]) -> bool:
        """组合是否满足全部规则（且每个维度取值合法）"""
        for dimension in self.dimensions:
            if assignments.get(dimension.name) not in dimension.values:
                return False
        return all(rule.admits(assignments) for rule in self.rules)

    def substitution_variables(self, config: StackConfig) -> Dict[str, str]:
        """配置对应的全部替换变量"""
        variables: Dict[str, str] = {"config_id": config.id}
        for dimension in self.dimensions:
            variables.update(dimension.variables_for(config.assignments[dimension.name]))
        return variables

    @property
    def declared_variables(self) -> Set[str]:
        names = {"config_id", "iteration"}
        for dimension in self.dimensions:
            names.update(dimension.variable_names)
        return names
