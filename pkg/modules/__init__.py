# cdfold 库包
# 格点模型、哈密顿量、泡利代数、态矢量模拟、BF-DCQO 循环、后处理与参考求解

from . import bfdcqo
from . import errors
from . import experiment
from . import hamiltonian
from . import lattice_model
from . import pauli_engine
from . import postproc
from . import qsim
from . import refsolve

__all__ = [
    'lattice_model',
    'hamiltonian',
    'pauli_engine',
    'qsim',
    'bfdcqo',
    'postproc',
    'refsolve',
    'experiment',
    'errors',
]
