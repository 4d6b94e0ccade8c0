"""
wattbench - 软件栈版本能耗基准工具
命令行入口：python wattbench.py <plan|run|analyze|report|simulate> ...
"""

import sys

from src.cli.main import main


if __name__ == "__main__":
    sys.exit(main())
