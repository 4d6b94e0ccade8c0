"""能耗测量与归因模块"""
