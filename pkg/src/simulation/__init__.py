"""仿真模块"""
