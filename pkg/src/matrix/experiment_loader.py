"""
实验文件加载器
解析 TOML 实验定义并完成全部交叉校验
"""

import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import structlog
from pydantic import ValidationError

from ..config.settings import get_settings
from ..core.exceptions import ExperimentConfigError
from ..models.energy_models import EnergySourceDescriptor, EnergySourceKind
from ..models.experiment_models import (
    CompatibilityRule,
    Dimension,
    Experiment,
    RunSettings,
    SimulationSettings,
)
from ..models.measurement_models import RunLifecycle
from ..models.workload_models import ReadinessProbe
from ..simulation.profiles import undeclared_offset_keys
from ..workload.templating import unresolved

logger = structlog.get_logger(__name__)

_TOML_POSITION_RE = re.compile(r"\(at line (\d+), column (\d+)\)")

# [run] 中属于生命周期的键
_LIFECYCLE_RUN_KEYS = ("cooldown_s", "max_retries", "error_rate_threshold", "include_startup")

# 生命周期模板可用的内置变量
BUILTIN_VARIABLES = {"config_id", "iteration", "base_url"}


def read_toml(path: Union[str, Path]) -> Dict[str, Any]:
    """
    读取 TOML 文件

    Raises:
        ExperimentConfigError: 文件不存在或语法错误（带行列号）
    """
    path = Path(path)
    try:
        with path.open("rb") as handle:
            return tomllib.load(handle)
    except FileNotFoundError as e:
        raise ExperimentConfigError(f"file not found: {path}", path=path, original_error=e)
    except tomllib.TOMLDecodeError as e:
        match = _TOML_POSITION_RE.search(str(e))
        line, column = (int(match.group(1)), int(match.group(2))) if match else (None, None)
        raise ExperimentConfigError(
            f"parse error: {e}", path=path, line=line, column=column, original_error=e
        )


def _as_label(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


class ExperimentLoader:
    """
    实验定义加载器

    文件结构：
        [experiment] name / host / description
        [dimensions.<name>] values = [...]，可选 [dimensions.<name>.vars."<value>"]
        [[rules]] dimension_a / value_a / dimension_b / allowed_b
        [run] iterations / ordering / cooldown_s / max_retries / error_rate_threshold / include_startup
        [lifecycle] setup / teardown / pidfile / base_url，可选 [lifecycle.readiness]
        [workload] plan（相对实验文件）
        [energy] kind = "rapl-sysfs" | "simulated"
        [simulation] base_runtime_s / runtime_noise / [simulation.profiles.<name>]
    """

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    def load(self) -> Experiment:
        """解析并校验实验文件"""
        document = read_toml(self.path)

        dimensions = self._parse_dimensions(document.get("dimensions"))
        rules = self._parse_rules(document.get("rules", []), dimensions)
        run_section = dict(document.get("run", {}))
        lifecycle = self._parse_lifecycle(document.get("lifecycle", {}), run_section, dimensions)
        energy = self._parse_energy(document.get("energy"))
        simulation = self._build(SimulationSettings, document.get("simulation", {}), "simulation")
        run = self._build(
            RunSettings,
            {
                "ordering": get_settings().run.ordering,
                **{k: v for k, v in run_section.items() if k not in _LIFECYCLE_RUN_KEYS},
            },
            "run",
        )

        header = document.get("experiment", {})
        experiment = self._build(
            Experiment,
            {
                "name": header.get("name", self.path.stem),
                "description": header.get("description"),
                "host": header.get("host"),
                "dimensions": dimensions,
                "rules": rules,
                "run": run,
                "lifecycle": lifecycle,
                "workload_plan": self._resolve_plan(document.get("workload", {})),
                "energy": energy,
                "simulation": simulation,
                "source_path": self.path.resolve(),
            },
            "experiment",
        )
        self._check_offsets(experiment)

        logger.debug(
            "experiment.loaded",
            path=str(self.path),
            dimensions=experiment.dimension_names,
            rules=len(rules),
            iterations=experiment.iterations,
        )
        return experiment

    def _fail(self, message: str, error: Optional[Exception] = None) -> ExperimentConfigError:
        return ExperimentConfigError(message, path=self.path, original_error=error)

    def _build(self, model, data: Dict[str, Any], section: str):
        try:
            return model.model_validate(data)
        except ValidationError as e:
            problems = "; ".join(
                f"{'.'.join(str(p) for p in err['loc']) or section}: {err['msg']}"
                for err in e.errors()
            )
            raise self._fail(f"invalid [{section}]: {problems}", e)

    def _parse_dimensions(self, section: Any) -> List[Dimension]:
        if not isinstance(section, dict) or not section:
            raise self._fail("experiment declares no [dimensions]")

        dimensions = []
        for name, body in section.items():
            if not isinstance(body, dict) or "values" not in body:
                raise self._fail(f"dimension {name!r} lacks values")
            variables = {
                _as_label(value): {k: _as_label(v) for k, v in mapping.items()}
                for value, mapping in body.get("vars", {}).items()
            }
            dimensions.append(
                self._build(
                    Dimension,
                    {
                        "name": name,
                        "values": [_as_label(v) for v in body["values"]],
                        "variables": variables,
                    },
                    f"dimensions.{name}",
                )
            )
        return dimensions

    def _parse_rules(self, section: Any, dimensions: List[Dimension]) -> List[CompatibilityRule]:
        by_name = {d.name: d for d in dimensions}
        rules = []
        for index, body in enumerate(section):
            for key in ("dimension_a", "dimension_b"):
                name = body.get(key)
                if name not in by_name:
                    raise self._fail(f"rule {index}: unknown dimension {name!r}")
            rule = self._build(
                CompatibilityRule,
                {
                    "dimension_a": body["dimension_a"],
                    "value_a": _as_label(body.get("value_a", "")),
                    "dimension_b": body["dimension_b"],
                    "allowed_values_b": [_as_label(v) for v in body.get("allowed_b", [])],
                },
                f"rules.{index}",
            )
            if rule.dimension_a == rule.dimension_b:
                raise self._fail(f"rule {index}: dimension_a and dimension_b are both {rule.dimension_a!r}")
            if rule.value_a not in by_name[rule.dimension_a].values:
                raise self._fail(
                    f"rule {index}: unknown value {rule.value_a!r} for dimension {rule.dimension_a!r}"
                )
            unknown = [v for v in rule.allowed_values_b if v not in by_name[rule.dimension_b].values]
            if unknown:
                raise self._fail(
                    f"rule {index}: unknown values {unknown} for dimension {rule.dimension_b!r}"
                )
            rules.append(rule)
        return rules

    def _parse_lifecycle(
        self,
        section: Dict[str, Any],
        run_section: Dict[str, Any],
        dimensions: List[Dimension],
    ) -> RunLifecycle:
        data: Dict[str, Any] = {
            "setup_commands": list(section.get("setup", [])),
            "teardown_commands": list(section.get("teardown", [])),
            "pidfile": section.get("pidfile"),
        }
        if "base_url" in section:
            data["base_url"] = section["base_url"]
        if "readiness" in section:
            data["readiness"] = self._build(ReadinessProbe, section["readiness"], "lifecycle.readiness")
        defaults = get_settings().run
        data["cooldown_s"] = defaults.cooldown_s
        data["max_retries"] = defaults.max_retries
        data["error_rate_threshold"] = defaults.error_rate_threshold
        for key in _LIFECYCLE_RUN_KEYS:
            if key in run_section:
                data[key] = run_section[key]

        lifecycle = self._build(RunLifecycle, data, "lifecycle")

        known = set(BUILTIN_VARIABLES)
        for dimension in dimensions:
            known |= dimension.variable_names
        templates = lifecycle.setup_commands + lifecycle.teardown_commands + [lifecycle.base_url]
        if lifecycle.pidfile:
            templates.append(lifecycle.pidfile)
        if lifecycle.readiness:
            templates.append(lifecycle.readiness.url)
        missing = unresolved(templates, known)
        if missing:
            raise self._fail(f"lifecycle references undeclared variables: {sorted(missing)}")
        return lifecycle

    def _parse_energy(self, section: Any) -> EnergySourceDescriptor:
        if not isinstance(section, dict) or "kind" not in section:
            raise self._fail("experiment declares no [energy] kind")
        return self._build(EnergySourceDescriptor, section, "energy")

    def _resolve_plan(self, section: Dict[str, Any]) -> Optional[Path]:
        plan = section.get("plan")
        if plan is None:
            return None
        path = Path(plan)
        if not path.is_absolute():
            path = self.path.parent / path
        if not path.exists():
            raise self._fail(f"workload plan not found: {path}")
        return path.resolve()

    def _check_offsets(self, experiment: Experiment) -> None:
        layers = {"energy.power_offsets": experiment.energy.power_offsets}
        for name, profile in experiment.simulation.profiles.items():
            layers[f"simulation.profiles.{name}.power_offsets"] = profile.power_offsets
            layers[f"simulation.profiles.{name}.runtime_offsets"] = profile.runtime_offsets
        for where, offsets in layers.items():
            bad = undeclared_offset_keys(offsets, experiment.dimensions)
            if bad:
                raise self._fail(f"{where} references undeclared configurations: {bad}")


def load_experiment(path: Union[str, Path]) -> Experiment:
    """
    加载实验文件

    Args:
        path: 实验 TOML 文件路径

    Returns:
        校验完成的 Experiment

    Raises:
        ExperimentConfigError: 语法或校验错误
    """
    return ExperimentLoader(path).load()
