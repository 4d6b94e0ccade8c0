"""HTTP 工作负载模块"""
