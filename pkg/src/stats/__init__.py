"""统计分析模块"""
