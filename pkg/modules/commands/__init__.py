# cdfold 命令包
# 每个命令一个 BaseModule 子类

from . import analyze
from . import baseline
from . import build
from . import help
from . import postprocess
from . import refsolve
from . import run

__all__ = [
    'build',
    'run',
    'baseline',
    'postprocess',
    'analyze',
    'refsolve',
    'help',
]
