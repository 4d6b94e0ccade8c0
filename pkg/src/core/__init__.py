"""核心工具模块"""
