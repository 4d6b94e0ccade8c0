"""
仿真测试
测试偏移解析与虚拟工作负载
"""

from pathlib import Path

import pytest

from src.energy.clock import VIRTUAL_EPOCH, VirtualClock
from src.models.experiment_models import Dimension, SimulationSettings, StackConfig
from src.models.workload_models import HttpMethod
from src.orchestration.lifecycle import RunContext
from src.simulation.profiles import merge_offsets, resolve_offset, undeclared_offset_keys
from src.simulation.virtual_workload import SimulatedWorkloadExecutor
from src.workload.plan_loader import load_test_plan

EXPERIMENTS = Path(__file__).parent.parent / "experiments"

DIMENSIONS = [
    Dimension(name="boot", values=["3.3", "3.4"]),
    Dimension(name="jvm", values=["17", "21"]),
]


def config(boot: str, jvm: str) -> StackConfig:
    return StackConfig(assignments={"boot": boot, "jvm": jvm})


# ==================== 偏移解析测试 ====================

class TestOffsets:
    """偏移解析测试"""

    def test_selectors_add_up(self):
        """测试：匹配的选择器偏移相加"""
        offsets = {"boot=3.4": 0.1, "jvm=21": 0.05}

        assert resolve_offset(offsets, config("3.4", "21")) == pytest.approx(0.15)
        assert resolve_offset(offsets, config("3.4", "17")) == pytest.approx(0.1)
        assert resolve_offset(offsets, config("3.3", "17")) == 0.0

    def test_exact_id_wins(self):
        """测试：完整配置 id 优先于选择器"""
        offsets = {"boot=3.4": 0.1, "boot=3.4_jvm=21": -0.2}

        assert resolve_offset(offsets, config("3.4", "21")) == pytest.approx(-0.2)

    def test_undeclared_keys(self):
        """测试：找出未声明的键"""
        keys = ["boot=3.4", "boot=3.3_jvm=21", "boot=9.9", "gc=zgc", "nonsense"]

        assert undeclared_offset_keys(keys, DIMENSIONS) == ["boot=9.9", "gc=zgc", "nonsense"]

    def test_merge_later_layer_wins(self):
        """测试：后面的层覆盖前面的层"""
        merged = merge_offsets({"boot=3.4": 0.1, "jvm=21": 0.2}, {"boot=3.4": 0.3})

        assert merged == {"boot=3.4": 0.3, "jvm=21": 0.2}


# ==================== 虚拟负载测试 ====================

@pytest.fixture
def clock():
    """虚拟时钟"""
    return VirtualClock(step_s=1.0)


@pytest.fixture
def plan():
    """参考测试计划"""
    return load_test_plan(EXPERIMENTS / "petclinic-plan.toml")


class TestSimulatedWorkload:
    """虚拟工作负载测试"""

    @pytest.mark.asyncio
    async def test_execute_advances_clock(self, plan, clock):
        """测试：执行推进虚拟时钟，计数等于计划总数"""
        executor = SimulatedWorkloadExecutor(plan, SimulationSettings(runtime_noise=0.0), clock)
        context = RunContext(config=config("3.4", "21"), iteration=0)

        summary = await executor.execute(context, {})

        assert clock.now() == pytest.approx(60.0)
        assert summary.wall_runtime_s == pytest.approx(60.0)
        assert summary.counts[HttpMethod.GET] == 5500
        assert summary.total_requests == 11500
        assert summary.error_count == 0
        assert summary.started_at == VIRTUAL_EPOCH

    @pytest.mark.asyncio
    async def test_boot_and_ready(self, plan, clock):
        """测试：启动推进 startup_s，随后立即就绪"""
        executor = SimulatedWorkloadExecutor(plan, SimulationSettings(startup_s=5.0), clock)
        context = RunContext(config=config("3.3", "17"), iteration=0)

        await executor.boot(context, {})
        outcome = await executor.wait_ready(None, {})

        assert clock.now() == pytest.approx(5.0)
        assert outcome.ready

    def test_runtime_offsets(self, plan, clock):
        """测试：运行时间偏移"""
        executor = SimulatedWorkloadExecutor(
            plan,
            SimulationSettings(base_runtime_s=100.0, runtime_noise=0.0),
            clock,
            runtime_offsets={"jvm=21": -0.25},
        )

        assert executor.runtime_for(RunContext(config=config("3.3", "21"), iteration=0)) == pytest.approx(75.0)
        assert executor.runtime_for(RunContext(config=config("3.3", "17"), iteration=0)) == pytest.approx(100.0)

    def test_runtime_noise_is_deterministic(self, plan, clock):
        """测试：噪声由种子、配置与迭代决定"""
        settings = SimulationSettings(runtime_noise=0.05)
        first = SimulatedWorkloadExecutor(plan, settings, clock, seed=3)
        second = SimulatedWorkloadExecutor(plan, settings, VirtualClock(), seed=3)
        other = SimulatedWorkloadExecutor(plan, settings, clock, seed=4)
        context = RunContext(config=config("3.4", "17"), iteration=2)

        assert first.runtime_for(context) == second.runtime_for(context)
        assert first.runtime_for(context) != other.runtime_for(context)
        assert first.runtime_for(context) != first.runtime_for(RunContext(config=config("3.4", "17"), iteration=3))

    def test_runtime_stays_positive(self, plan, clock):
        """测试：极端负偏移时运行时间不小于一个步长"""
        executor = SimulatedWorkloadExecutor(
            plan, SimulationSettings(runtime_noise=0.0), clock, runtime_offsets={"boot=3.3": -1.0}
        )

        assert executor.runtime_for(RunContext(config=config("3.3", "17"), iteration=0)) == clock.step_s

    @pytest.mark.asyncio
    async def test_without_plan(self, clock):
        """测试：无测试计划时计数为 0"""
        executor = SimulatedWorkloadExecutor(None, SimulationSettings(runtime_noise=0.0), clock)

        summary = await executor.execute(RunContext(config=config("3.3", "17"), iteration=0), {})

        assert summary.total_requests == 0
        assert summary.error_rate == 0.0


if __name__ == "__main__":
    pytest.main([__file__, "-v", "--tb=short"])
