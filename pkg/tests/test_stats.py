"""
统计模块测试
手算样例 + 与独立实现（scipy / scikit-posthocs / statsmodels）对照
"""

import math
from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
import scikit_posthocs
from scipy import stats as scipy_stats
from statsmodels.stats.multitest import multipletests

from src.core.exceptions import DegenerateDataError, InsufficientDataError, StatisticsError
from src.models.analysis_models import SampleGroup
from src.models.measurement_models import MeasurementRecord, RunStatus
from src.stats.correlation import pearson
from src.stats.descriptive import iqr_filter, quartiles, split_metric, tukey_boxplot
from src.stats.distributions import (
    chi2_sf,
    regularized_beta,
    regularized_gamma_upper,
    student_t_two_sided,
)
from src.stats.effect_size import cliffs_delta, cliffs_delta_bruteforce, magnitude_label
from src.stats.nonparametric import conover_pairwise, holm_adjust, kruskal_wallis, tie_correction, midranks
from src.stats.normality import shapiro_coefficients, shapiro_wilk

STARTED = datetime(2025, 1, 1, tzinfo=timezone.utc)


def make_record(config_id: str, joules: float, runtime_s: float = 60.0, iteration: int = 0) -> MeasurementRecord:
    return MeasurementRecord(
        host="test",
        config_id=config_id,
        assignments={"version": config_id},
        iteration=iteration,
        status=RunStatus.OK,
        joules=joules,
        runtime_s=runtime_s,
        started_at=STARTED,
    )


DATA = Path(__file__).parent / "data"


@lru_cache(maxsize=None)
def oracle_table(name: str) -> pd.DataFrame:
    return pd.read_csv(DATA / f"oracle_{name}.csv", float_precision="round_trip")


@lru_cache(maxsize=None)
def frozen_datasets():
    """tests/data 中的 20 个数据集（每个为按组号排列的值列表）"""
    table = oracle_table("datasets")
    return [
        [group["value"].tolist() for _, group in dataset.groupby("group", sort=True)]
        for _, dataset in table.groupby("dataset", sort=True)
    ]


# ==================== 描述统计测试 ====================

class TestDescriptive:
    """四分位数、IQR 清洗与箱线图测试"""

    def test_quartile_fences(self):
        """测试：1..10 的栅栏为 (-3.5, 14.5)"""
        summary = quartiles(range(1, 11))

        assert summary.q1 == pytest.approx(3.25)
        assert summary.q3 == pytest.approx(7.75)
        assert summary.lower_fence == pytest.approx(-3.5)
        assert summary.upper_fence == pytest.approx(14.5)

    def test_quartiles_need_four_values(self):
        """测试：少于 4 个值报错"""
        with pytest.raises(InsufficientDataError):
            quartiles([1.0, 2.0, 3.0])

    def test_iqr_filter_removes_outlier(self):
        """测试：离群记录被整体移除"""
        records = [make_record("A", v, iteration=i) for i, v in enumerate([10, 11, 12, 13, 100])]
        result = iqr_filter(records)

        assert [r.joules for r in result.kept] == [10, 11, 12, 13]
        assert [r.joules for r in result.removed] == [100]

    def test_iqr_filter_either_metric(self):
        """测试：任一指标越界即移除"""
        records = [make_record("A", 10 + i, runtime_s=60.0, iteration=i) for i in range(5)]
        records.append(make_record("A", 12, runtime_s=600.0, iteration=5))
        result = iqr_filter(records)

        assert len(result.removed) == 1
        assert result.removed[0].runtime_s == 600.0

    def test_iqr_filter_is_single_pass(self):
        """测试：栅栏不在清洗后重算"""
        values = [10, 11, 12, 13, 14, 15, 16, 17, 18, 40, 200]
        records = [make_record("A", v, iteration=i) for i, v in enumerate(values)]
        result = iqr_filter(records)

        assert 200 in [r.joules for r in result.removed]
        assert all(r in records for r in result.kept)
        assert len(result.kept) + len(result.removed) == len(records)

    def test_iqr_filter_small_group(self):
        """测试：某组少于 4 条记录报错"""
        records = [make_record("A", v) for v in (1, 2, 3)]

        with pytest.raises(InsufficientDataError):
            iqr_filter(records)

    def test_tukey_whiskers_inside_fences(self):
        """测试：须为栅栏内最远的数据点"""
        box = tukey_boxplot("A", [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 50])

        assert box.whisker_high == 10
        assert box.whisker_low == 1
        assert box.median == 6
        assert box.n == 11

    def test_split_metric_preserves_order(self):
        """测试：按首次出现顺序分组"""
        records = [make_record("B", 1), make_record("A", 2), make_record("B", 3)]
        labels, values = split_metric(records, "joules", "config_id")

        assert labels == ["B", "A"]
        assert values == {"B": [1.0, 3.0], "A": [2.0]}


# ==================== 正态性测试 ====================

class TestShapiroWilk:
    """Shapiro-Wilk 测试"""

    def test_three_equally_spaced(self):
        """测试：{1,2,3} 的 W = 1"""
        result = shapiro_wilk([1, 2, 3])

        assert result.w_statistic == pytest.approx(1.0)
        assert result.p_value == pytest.approx(1.0, abs=1e-5)

    def test_coefficients_normalized(self):
        """测试：系数平方和为 1/2"""
        for n in (3, 4, 5, 6, 11, 12, 50, 500):
            a = shapiro_coefficients(n)
            assert float(np.sum(a ** 2)) == pytest.approx(0.5, rel=1e-9)
            assert np.all(a > 0)

    def test_too_few(self):
        """测试：n < 3 报错"""
        with pytest.raises(InsufficientDataError):
            shapiro_wilk([1.0, 2.0])

    def test_zero_variance(self):
        """测试：零方差报错"""
        with pytest.raises(DegenerateDataError):
            shapiro_wilk([5.0] * 10)

    def test_too_many(self):
        """测试：n > 5000 报错"""
        with pytest.raises(StatisticsError):
            shapiro_wilk(np.arange(5001, dtype=float))

    @pytest.mark.parametrize("n", [4, 7, 11, 12, 50, 100])
    def test_matches_scipy(self, n):
        """测试：W、p 与 scipy 一致"""
        sample = np.random.default_rng(n).normal(size=n)
        ours = shapiro_wilk(sample)
        reference = scipy_stats.shapiro(sample)

        assert ours.w_statistic == pytest.approx(reference.statistic, rel=1e-4)
        assert ours.p_value == pytest.approx(reference.pvalue, abs=1e-4)

    def test_normal_sample_not_rejected(self):
        """测试：正态样本 p 值不小"""
        sample = np.random.default_rng(7).normal(size=50)
        assert shapiro_wilk(sample).p_value > 0.001

    def test_skewed_sample_rejected(self):
        """测试：指数样本被拒绝"""
        sample = np.random.default_rng(7).exponential(size=200)
        assert shapiro_wilk(sample).p_value < 0.01


# ==================== Kruskal-Wallis 测试 ====================

class TestKruskalWallis:
    """Kruskal-Wallis 测试"""

    def test_hand_computed(self):
        """测试：{1,2,3} vs {4,5,6} 的 H = 3.857, p ≈ 0.0495"""
        result = kruskal_wallis([[1, 2, 3], [4, 5, 6]])

        assert result.h_statistic == pytest.approx(27 / 7)
        assert result.p_value == pytest.approx(0.0495, abs=1e-4)
        assert result.df == 1
        assert result.n_total == 6

    def test_midranks(self):
        """测试：结取平均秩"""
        assert midranks([10, 20, 20, 30]).tolist() == [1.0, 2.5, 2.5, 4.0]

    def test_midranks_match_bruteforce_with_ties(self):
        """测试：有结时平均秩与逐个计数一致，秩和为 N(N+1)/2"""
        values = np.random.default_rng(3).integers(0, 12, size=60).astype(float)
        expected = [
            float(np.sum(values < v)) + (float(np.sum(values == v)) + 1) / 2 for v in values
        ]
        ranks = midranks(values)

        assert ranks.tolist() == expected
        assert ranks.sum() == len(values) * (len(values) + 1) / 2

    def test_invariant_under_monotone_transform(self):
        """测试：x → exp(x) 不改变 H"""
        for groups in frozen_datasets()[:5]:
            shifted = [np.exp(np.asarray(g)) for g in groups]
            assert kruskal_wallis(shifted).h_statistic == pytest.approx(
                kruskal_wallis(groups).h_statistic, rel=1e-12
            )

    def test_tie_correction_without_ties(self):
        """测试：无结时校正因子为 1"""
        assert tie_correction(midranks([1, 2, 3, 4])) == pytest.approx(1.0)

    def test_single_group(self):
        """测试：少于 2 组报错"""
        with pytest.raises(InsufficientDataError):
            kruskal_wallis([[1, 2, 3]])

    def test_all_equal(self):
        """测试：全部相同报错"""
        with pytest.raises(DegenerateDataError):
            kruskal_wallis([[5, 5, 5], [5, 5]])

    def test_named_groups(self):
        """测试：SampleGroup 标签保留到两两结果"""
        groups = [SampleGroup(label="A", values=[1, 2, 3, 4]), SampleGroup(label="B", values=[5, 6, 7, 8])]
        pairs = conover_pairwise(groups, kruskal_wallis(groups))

        assert [(p.label_a, p.label_b) for p in pairs] == [("A", "B")]

    def test_conover_needs_matching_omnibus(self):
        """测试：omnibus 与组不一致报错"""
        omnibus = kruskal_wallis([[1, 2, 3], [4, 5, 6]])

        with pytest.raises(StatisticsError):
            conover_pairwise([[1, 2, 3], [4, 5, 6], [7, 8, 9]], omnibus)

    def test_conover_single_observation_groups(self):
        """测试：N = k 报错"""
        omnibus = kruskal_wallis([[1], [2]])

        with pytest.raises(DegenerateDataError):
            conover_pairwise([[1], [2]], omnibus)


# ==================== Holm 校正测试 ====================

class TestHolm:
    """Holm 校正测试"""

    def test_hand_computed(self):
        """测试：(0.01, 0.02, 0.04) → (0.03, 0.04, 0.04)"""
        assert holm_adjust([0.01, 0.02, 0.04]) == pytest.approx([0.03, 0.04, 0.04])

    def test_preserves_order_and_bounds(self):
        """测试：保持输入顺序、校正值不小于原值且不超过 1"""
        raw = [0.5, 0.001, 0.3, 0.02]
        adjusted = holm_adjust(raw)

        assert adjusted[1] == pytest.approx(0.004)
        assert all(a >= r for a, r in zip(adjusted, raw))
        assert max(adjusted) <= 1.0

    def test_empty(self):
        """测试：空输入"""
        assert holm_adjust([]) == []

    def test_invalid_p(self):
        """测试：越界 p 值报错"""
        with pytest.raises(StatisticsError):
            holm_adjust([0.5, 1.5])


# ==================== 效应量测试 ====================

class TestCliffsDelta:
    """Cliff's delta 测试"""

    def test_hand_computed(self):
        """测试：{1,3} vs {2,4} 的 δ = −0.5"""
        assert cliffs_delta([1, 3], [2, 4]) == pytest.approx(-0.5)

    def test_extremes(self):
        """测试：完全分离时 |δ| = 1"""
        assert cliffs_delta([5, 6], [1, 2]) == 1.0
        assert cliffs_delta([1, 2], [5, 6]) == -1.0

    def test_antisymmetry(self):
        """测试：δ(a, b) = −δ(b, a)"""
        rng = np.random.default_rng(3)
        a, b = rng.integers(0, 20, 40), rng.integers(0, 20, 55)

        assert cliffs_delta(a, b) == -cliffs_delta(b, a)

    def test_monotone_invariance(self):
        """测试：严格单调变换不改变 δ"""
        rng = np.random.default_rng(4)
        a, b = rng.uniform(1, 10, 30), rng.uniform(1, 10, 30)

        assert cliffs_delta(np.log(a), np.log(b)) == pytest.approx(cliffs_delta(a, b))

    def test_matches_bruteforce(self):
        """测试：排序实现与逐对比较一致（含结）"""
        rng = np.random.default_rng(5)
        for _ in range(20):
            a = rng.integers(0, 15, int(rng.integers(1, 60)))
            b = rng.integers(0, 15, int(rng.integers(1, 60)))
            assert cliffs_delta(a, b) == pytest.approx(cliffs_delta_bruteforce(a, b), abs=1e-12)

    def test_empty(self):
        """测试：空样本报错"""
        with pytest.raises(InsufficientDataError):
            cliffs_delta([], [1.0])

    def test_magnitude(self):
        """测试：效应量等级"""
        assert magnitude_label(0.1) == "negligible"
        assert magnitude_label(-0.2) == "small"
        assert magnitude_label(0.4) == "medium"
        assert magnitude_label(-0.9) == "large"


# ==================== 相关测试 ====================

class TestPearson:
    """Pearson 相关测试"""

    def test_perfect(self):
        """测试：完全线性相关"""
        result = pearson([1, 2, 3, 4], [2, 4, 6, 8])

        assert result.r == pytest.approx(1.0)
        assert result.p_value < 1e-6

    def test_matches_scipy(self):
        """测试：r、p 与 scipy 一致"""
        rng = np.random.default_rng(40)
        x = rng.normal(size=40)
        y = 0.5 * x + rng.normal(size=40)
        ours = pearson(x, y)
        reference = scipy_stats.pearsonr(x, y)

        assert ours.r == pytest.approx(reference.statistic, rel=1e-9)
        assert ours.p_value == pytest.approx(reference.pvalue, rel=1e-7)

    def test_affine_invariance(self):
        """测试：正仿射变换不改变 r，负缩放翻转符号"""
        rng = np.random.default_rng(41)
        x = rng.normal(size=30)
        y = 0.3 * x + rng.normal(size=30)
        base = pearson(x, y)

        scaled = pearson(3.5 * x + 7.0, 0.2 * y - 1.0)
        flipped = pearson(-2.0 * x, y)

        assert scaled.r == pytest.approx(base.r, rel=1e-12)
        assert scaled.p_value == pytest.approx(base.p_value, rel=1e-9)
        assert flipped.r == pytest.approx(-base.r, rel=1e-12)
        assert flipped.p_value == pytest.approx(base.p_value, rel=1e-9)

    def test_errors(self):
        """测试：长度不一致、样本过少、常数输入"""
        with pytest.raises(StatisticsError):
            pearson([1, 2, 3], [1, 2])
        with pytest.raises(InsufficientDataError):
            pearson([1, 2], [1, 2])
        with pytest.raises(DegenerateDataError):
            pearson([1, 1, 1], [1, 2, 3])


# ==================== 分布函数测试 ====================

class TestDistributions:
    """尾概率测试"""

    def test_chi2(self):
        """测试：卡方上尾概率"""
        assert chi2_sf(3.841458820694124, 1) == pytest.approx(0.05, rel=1e-9)
        assert chi2_sf(0.0, 3) == 1.0

    def test_student_t(self):
        """测试：t 分布双侧 p 值"""
        assert student_t_two_sided(2.0, 10) == pytest.approx(2 * scipy_stats.t.sf(2.0, 10), rel=1e-10)
        assert student_t_two_sided(float("inf"), 10) == 0.0
        assert student_t_two_sided(0.0, 10) == pytest.approx(1.0)

    @pytest.mark.parametrize("a, x, expected", [
        (1.0, 2.0, math.exp(-2.0)),
        (1.0, 30.0, math.exp(-30.0)),
        (3.0, 2.0, 5.0 * math.exp(-2.0)),
        (0.5, 1.0, math.erfc(1.0)),
        (0.5, 9.0, math.erfc(3.0)),
    ])
    def test_gamma_closed_forms(self, a, x, expected):
        """测试：Q(1, x) = e^-x，Q(3, x) = e^-x(1 + x + x²/2)，Q(1/2, x) = erfc(√x)"""
        assert regularized_gamma_upper(a, x) == pytest.approx(expected, rel=1e-10)

    @pytest.mark.parametrize("a, b, x, expected", [
        (2.5, 1.0, 0.3, 0.3 ** 2.5),
        (1.0, 3.0, 0.2, 1.0 - 0.8 ** 3),
        (2.0, 2.0, 0.25, 3 * 0.25 ** 2 - 2 * 0.25 ** 3),
        (7.3, 7.3, 0.5, 0.5),
    ])
    def test_beta_closed_forms(self, a, b, x, expected):
        """测试：I_x(a, 1) = x^a，I_x(1, b) = 1 − (1 − x)^b，I_x(2, 2) = 3x² − 2x³，对称点为 1/2"""
        assert regularized_beta(a, b, x) == pytest.approx(expected, rel=1e-10)

    @pytest.mark.parametrize("t, df, expected", [
        (1.0, 1, 0.5),
        (3.0, 1, 1.0 - 2.0 / math.pi * math.atan(3.0)),
        (2.0, 2, 1.0 - 2.0 / math.sqrt(6.0)),
        (12.706204736174696, 1, 0.05),
    ])
    def test_student_t_closed_forms(self, t, df, expected):
        """测试：df = 1（Cauchy）与 df = 2 的双侧 p 值闭式解"""
        assert student_t_two_sided(t, df) == pytest.approx(expected, rel=1e-10)


# ==================== 独立实现对照测试 ====================

class TestFrozenOracles:
    """与 tests/data 中提交的参考值逐项对照"""

    @pytest.mark.parametrize("index", range(20))
    def test_omnibus(self, index):
        """测试：H 与 p"""
        expected = oracle_table("omnibus").set_index("dataset").loc[index]
        result = kruskal_wallis(frozen_datasets()[index])

        assert result.h_statistic == pytest.approx(expected["h_statistic"], rel=1e-8)
        assert result.p_value == pytest.approx(expected["p_value"], rel=1e-8, abs=1e-300)

    @pytest.mark.parametrize("index", range(20))
    def test_pairwise(self, index):
        """测试：Conover 原始 p、Holm p 与 Cliff's δ"""
        groups = frozen_datasets()[index]
        table = oracle_table("pairwise")
        expected = table[table["dataset"] == index]
        pairs = conover_pairwise(groups, kruskal_wallis(groups))
        raw = [p.raw_p for p in pairs]

        assert [(int(a), int(b)) for a, b in zip(expected["group_a"], expected["group_b"])] == [
            (int(p.label_a[1:]), int(p.label_b[1:])) for p in pairs
        ]
        assert raw == pytest.approx(expected["conover_p"].tolist(), rel=1e-8, abs=1e-300)
        assert holm_adjust(raw) == pytest.approx(expected["holm_p"].tolist(), rel=1e-8, abs=1e-300)
        deltas = [cliffs_delta(groups[int(a)], groups[int(b)]) for a, b in zip(expected["group_a"], expected["group_b"])]
        assert deltas == pytest.approx(expected["cliffs_delta"].tolist(), rel=1e-8, abs=1e-15)

    @pytest.mark.parametrize("index", range(20))
    def test_normality(self, index):
        """测试：每组 Shapiro-Wilk W 与 p"""
        table = oracle_table("normality")
        expected = table[table["dataset"] == index]
        groups = frozen_datasets()[index]

        for group, w, p in zip(expected["group"], expected["w_statistic"], expected["p_value"]):
            result = shapiro_wilk(groups[int(group)])
            assert result.w_statistic == pytest.approx(w, rel=1e-8)
            assert result.p_value == pytest.approx(p, rel=1e-8)

    @pytest.mark.parametrize("index", range(20))
    def test_pearson(self, index):
        """测试：第 0 组与第 1 组等长前缀的 r 与 p"""
        expected = oracle_table("pearson").set_index("dataset").loc[index]
        first, second = frozen_datasets()[index][:2]
        n = min(len(first), len(second))
        result = pearson(first[:n], second[:n])

        assert result.r == pytest.approx(expected["r"], rel=1e-8)
        assert result.p_value == pytest.approx(expected["p_value"], rel=1e-8)


class TestOracleParity:
    """20 个随机数据集上与独立实现逐项对照"""

    @pytest.mark.parametrize("index", range(20))
    def test_dataset(self, index):
        """测试：H、Conover p、Holm p、δ、W、Pearson 与参考实现一致"""
        groups = frozen_datasets()[index]

        omnibus = kruskal_wallis(groups)
        reference = scipy_stats.kruskal(*groups)
        assert omnibus.h_statistic == pytest.approx(reference.statistic, rel=1e-8)
        assert omnibus.p_value == pytest.approx(reference.pvalue, rel=1e-8, abs=1e-300)

        pairs = conover_pairwise(groups, omnibus)
        matrix = scikit_posthocs.posthoc_conover(groups, p_adjust=None).to_numpy()
        expected = [
            matrix[i, j] for i in range(len(groups)) for j in range(i + 1, len(groups))
        ]
        assert [p.raw_p for p in pairs] == pytest.approx(expected, rel=1e-8, abs=1e-300)

        raw = [p.raw_p for p in pairs]
        assert holm_adjust(raw) == pytest.approx(
            multipletests(raw, method="holm")[1].tolist(), rel=1e-8, abs=1e-300
        )

        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                assert cliffs_delta(groups[i], groups[j]) == pytest.approx(
                    cliffs_delta_bruteforce(groups[i], groups[j]), abs=1e-12
                )

        for group in groups:
            assert shapiro_wilk(group).w_statistic == pytest.approx(
                scipy_stats.shapiro(group).statistic, rel=1e-4
            )

        n = min(len(groups[0]), len(groups[1]))
        ours = pearson(groups[0][:n], groups[1][:n])
        reference = scipy_stats.pearsonr(groups[0][:n], groups[1][:n])
        assert ours.r == pytest.approx(reference.statistic, rel=1e-9, abs=1e-15)
        assert ours.p_value == pytest.approx(reference.pvalue, rel=1e-7)

    def test_two_groups_agree_with_omnibus(self):
        """测试：两组时两两 p 值与总体 p 值单调一致"""
        rng = np.random.default_rng(99)
        omnibus_p, pair_p = [], []
        for _ in range(20):
            groups = [rng.normal(size=30), rng.normal(loc=rng.uniform(0, 1.5), size=30)]
            omnibus = kruskal_wallis(groups)
            (pair,) = conover_pairwise(groups, omnibus)
            omnibus_p.append(omnibus.p_value)
            pair_p.append(pair.raw_p)

        assert np.argsort(omnibus_p).tolist() == np.argsort(pair_p).tolist()


if __name__ == "__main__":
    pytest.main([__file__, "-v", "--tb=short"])
