"""
异常定义
命令层根据异常类型决定退出码：ValidationError -> 2，其余 CdfoldError -> 1
"""

from typing import Optional


class CdfoldError(Exception):
    """cdfold 所有异常的基类"""


class ValidationError(CdfoldError, ValueError):
    """输入校验失败（残基字母、矩阵文件、参数范围等）"""

    def __init__(self, message: str, position: Optional[int] = None):
        super().__init__(message)
        self.position = position


class InfeasibleConformationError(CdfoldError):
    """构象存在珠子重叠或回溯"""


class DegenerateInstanceError(CdfoldError):
    """α₁ 分母为零等退化实例"""


class SimulationCapError(CdfoldError):
    """量子比特数超过态矢量模拟上限"""


class PoolExhaustedError(CdfoldError):
    """共识流程无法构造任何可行几何候选"""


class EmptyResultError(CdfoldError):
    """逐样本修复时没有任何几何可行样本"""
