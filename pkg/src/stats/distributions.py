"""
分布尾概率

基于 scipy.special 的正则化不完全 gamma / beta 函数与正态分布函数
"""

import math

from scipy import special


def regularized_gamma_upper(a: float, x: float) -> float:
    """Q(a, x) = Γ(a, x) / Γ(a)"""
    return float(special.gammaincc(a, x))


def regularized_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b)"""
    return float(special.betainc(a, b, x))


def chi2_sf(x: float, df: float) -> float:
    """卡方分布上尾概率"""
    if x <= 0:
        return 1.0
    return regularized_gamma_upper(df / 2.0, x / 2.0)


def student_t_two_sided(t: float, df: float) -> float:
    """Student-t 双侧 p 值：I_{df/(df+t²)}(df/2, 1/2)"""
    if math.isinf(t):
        return 0.0
    return min(1.0, regularized_beta(df / 2.0, 0.5, df / (df + t * t)))


def normal_sf(z: float) -> float:
    """标准正态上尾概率"""
    return float(special.ndtr(-z))


def normal_ppf(p: float) -> float:
    """标准正态分位数"""
    return float(special.ndtri(p))
