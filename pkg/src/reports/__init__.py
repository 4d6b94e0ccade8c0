"""报告生成模块"""
