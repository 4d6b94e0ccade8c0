"""编排层模块"""
