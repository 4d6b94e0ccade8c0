"""实验矩阵模块"""
