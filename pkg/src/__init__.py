"""
wattbench - 软件栈版本能耗基准工具
核心模块包
"""

__version__ = "0.3.0"
__author__ = "Your Team"
