"""
四面体（金刚石）格点蛋白模型
肽链编码、转向序列、珠子几何、接触对组合以及量子比特布局
"""

import itertools
import os
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import InfeasibleConformationError, ValidationError

logger = logging.getLogger(__name__)

# 20 种标准氨基酸单字母代码
STANDARD_RESIDUES = "ACDEFGHIKLMNPQRSTVWY"

# 转向标签 -> 四面体键矢量，标签 = 2*b_hi + b_lo
BOND_VECTORS = (
    (1, 1, 1),
    (1, -1, -1),
    (-1, 1, -1),
    (-1, -1, 1),
)

# 规范固定：第1、2个转向固定，第3个转向高位固定为0
GAUGE_TURNS = (0, 1)
GAUGE_QUBITS = 5

# 四面体点群的12个真转动，作用在方向标签上即为偶置换
TETRAHEDRAL_ROTATIONS = tuple(
    perm for perm in itertools.permutations(range(4))
    if sum(1 for a, b in itertools.combinations(perm, 2) if a > b) % 2 == 0
)

BitsLike = Union[str, Sequence[int]]


def as_bits(bits: BitsLike) -> Tuple[int, ...]:
    """把 '0101' 字符串或整数序列统一成整数元组"""
    if isinstance(bits, str):
        if any(c not in "01" for c in bits):
            raise ValidationError(f"比特串只能包含 0/1: '{bits}'")
        return tuple(int(c) for c in bits)
    out = tuple(int(b) for b in bits)
    if any(b not in (0, 1) for b in out):
        raise ValidationError("比特序列只能包含 0/1")
    return out


def bits_to_str(bits: Iterable[int]) -> str:
    return "".join(str(int(b)) for b in bits)


@dataclass(frozen=True)
class Peptide:
    """肽链，残基为单字母代码"""

    residues: Tuple[str, ...]

    def __post_init__(self):
        if len(self.residues) < 4:
            raise ValidationError(f"肽链长度至少为4，当前为 {len(self.residues)}")
        for pos, code in enumerate(self.residues, start=1):
            if code not in STANDARD_RESIDUES:
                raise ValidationError(f"第 {pos} 位残基 '{code}' 不是标准氨基酸字母", position=pos)

    @classmethod
    def from_string(cls, sequence: str) -> "Peptide":
        return cls(tuple(sequence.strip().upper()))

    @property
    def n(self) -> int:
        return len(self.residues)

    def __str__(self) -> str:
        return "".join(self.residues)


@dataclass(frozen=True, eq=False)
class InteractionMatrix:
    """
    残基接触能矩阵 ε_ij（无量纲）
    按 STANDARD_RESIDUES 的顺序存储为 20x20 只读数组
    """

    eps: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        eps = np.array(self.eps, dtype=float)
        if eps.shape != (20, 20):
            raise ValidationError(f"接触能矩阵必须是 20x20，当前为 {eps.shape}")
        if not np.all(np.isfinite(eps)):
            raise ValidationError("接触能矩阵包含非有限值")
        if not np.array_equal(eps, eps.T):
            raise ValidationError("接触能矩阵不对称")
        eps.setflags(write=False)
        object.__setattr__(self, "eps", eps)

    def energy(self, a: str, b: str) -> float:
        return float(self.eps[STANDARD_RESIDUES.index(a), STANDARD_RESIDUES.index(b)])

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.eps)))

    @classmethod
    def hp(cls) -> "InteractionMatrix":
        """HP 玩具矩阵：仅 ε_HH = -1，其余为 0"""
        eps = np.zeros((20, 20))
        h = STANDARD_RESIDUES.index("H")
        eps[h, h] = -1.0
        return cls(eps, name="hp")

    @classmethod
    def load(cls, path: str) -> "InteractionMatrix":
        """
        从文本文件加载矩阵

        格式：第一行为20个残基字母，随后20行、每行20个空白分隔的实数

        Args:
            path: 矩阵文件路径

        Returns:
            按标准字母顺序重排后的矩阵
        """
        try:
            with open(path, "r", encoding="utf-8") as f:
                lines = [ln.split() for ln in f if ln.strip() and not ln.lstrip().startswith("#")]
        except OSError as e:
            raise ValidationError(f"无法读取矩阵文件 {path}: {e}")

        if len(lines) != 21:
            raise ValidationError(f"矩阵文件 {path} 应包含1行表头和20行数据，实际 {len(lines)} 行")

        header = [c.upper() for c in lines[0]]
        if sorted(header) != sorted(STANDARD_RESIDUES):
            raise ValidationError(f"矩阵文件 {path} 的表头必须恰好包含20种标准残基")

        try:
            raw = np.array([[float(v) for v in row] for row in lines[1:]])
        except ValueError as e:
            raise ValidationError(f"矩阵文件 {path} 含有非数值项: {e}")
        if raw.shape != (20, 20):
            raise ValidationError(f"矩阵文件 {path} 的数据部分必须是 20x20")

        order = [header.index(c) for c in STANDARD_RESIDUES]
        eps = raw[np.ix_(order, order)]
        # 按内容而不是文件名识别 HP 矩阵
        name = "hp" if np.array_equal(eps, cls.hp().eps) else os.path.abspath(path)
        logger.debug(f"已加载接触能矩阵: {path} ({name})")
        return cls(eps, name=name)


@dataclass(frozen=True)
class TurnSequence:
    """N-1 个转向标签，取值 0..3"""

    turns: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "turns", tuple(int(t) for t in self.turns))
        if any(t not in (0, 1, 2, 3) for t in self.turns):
            raise ValidationError(f"转向标签必须在 0..3 之间: {self.turns}")

    @property
    def n_residues(self) -> int:
        return len(self.turns) + 1

    def __len__(self) -> int:
        return len(self.turns)

    def __iter__(self):
        return iter(self.turns)

    def __getitem__(self, k):
        return self.turns[k]


@dataclass(frozen=True)
class Conformation:
    """格点上的珠子坐标，position[0] 为原点"""

    positions: Tuple[Tuple[int, int, int], ...]

    @property
    def n(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class QubitLayout:
    """
    量子比特布局

    几何比特在前：0 号为第3个转向的低位，之后每个转向 (hi, lo) 各一位；
    接触比特在后，顺序与 contact_pairs 一致
    """

    n_residues: int
    contact_pairs: Tuple[Tuple[int, int], ...]
    n_geom: int
    n_contact: int
    _pair_index: Dict[Tuple[int, int], int] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_pair_index", {p: k for k, p in enumerate(self.contact_pairs)})

    @property
    def n_q(self) -> int:
        return self.n_geom + self.n_contact

    def contact_qubit(self, pair: Tuple[int, int]) -> int:
        return self.n_geom + self._pair_index[pair]

    def turn_qubits(self, k: int) -> Tuple[Optional[int], Optional[int]]:
        """第 k 个转向（1 起）对应的 (hi, lo) 比特下标，规范固定位返回 None"""
        if k < 1 or k > self.n_residues - 1:
            raise ValueError(f"转向编号越界: {k}")
        if k <= 2:
            return None, None
        if k == 3:
            return None, 0
        return 2 * k - 7, 2 * k - 6

    def split(self, bits: BitsLike) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        """拆分为 (几何比特, 接触比特)"""
        b = as_bits(bits)
        if len(b) != self.n_q:
            raise ValidationError(f"比特串长度 {len(b)} 与布局 n_q={self.n_q} 不符")
        return b[:self.n_geom], b[self.n_geom:]

    def role(self, qubit: int) -> str:
        if 0 <= qubit < self.n_geom:
            return "geometry"
        if self.n_geom <= qubit < self.n_q:
            return "contact"
        raise ValueError(f"比特下标越界: {qubit}")


def contact_pairs(n: int) -> List[Tuple[int, int]]:
    """
    可形成接触的残基对 (i, j)，1 起编号

    二部格上只有奇数间隔的珠子可能相邻，因此要求 j-i >= 5 且为奇数
    """
    if n < 2:
        raise ValidationError(f"残基数至少为2: {n}")
    return [(i, j) for i in range(1, n + 1) for j in range(i + 5, n + 1) if (j - i) % 2 == 1]


def n_geometry_qubits(n: int) -> int:
    return 2 * (n - 1) - GAUGE_QUBITS


def qubit_layout(peptide: Union[Peptide, str, int]) -> QubitLayout:
    """由肽链（或残基数）生成量子比特布局"""
    if isinstance(peptide, str):
        peptide = Peptide.from_string(peptide)
    n = peptide if isinstance(peptide, int) else peptide.n
    if n < 4:
        raise ValidationError(f"肽链长度至少为4，当前为 {n}")
    pairs = tuple(contact_pairs(n))
    return QubitLayout(n_residues=n, contact_pairs=pairs, n_geom=n_geometry_qubits(n), n_contact=len(pairs))


def decode_geometry(geom_bits: BitsLike, n_residues: int) -> TurnSequence:
    """
    几何比特 -> 转向序列，补上规范前缀

    Args:
        geom_bits: 长度为 n_geom 的比特串
        n_residues: 残基数 N

    Returns:
        N-1 个转向
    """
    bits = as_bits(geom_bits)
    expected = n_geometry_qubits(n_residues)
    if len(bits) != expected:
        raise ValidationError(f"几何比特长度 {len(bits)} 与 N={n_residues} 要求的 {expected} 不符")

    turns = list(GAUGE_TURNS)
    # 第3个转向高位固定为 0
    turns.append(bits[0])
    for k in range(1, len(bits), 2):
        turns.append(2 * bits[k] + bits[k + 1])
    return TurnSequence(tuple(turns))


def encode_geometry(turns: Union[TurnSequence, Sequence[int]]) -> str:
    """转向序列 -> 几何比特串，要求满足规范前缀"""
    t = tuple(turns)
    if len(t) < 3 or t[:2] != GAUGE_TURNS or t[2] not in (0, 1):
        raise ValidationError(f"转向序列不满足规范固定 (0, 1, {{0,1}}, ...): {t}")
    bits = [t[2]]
    for label in t[3:]:
        if label not in (0, 1, 2, 3):
            raise ValidationError(f"转向标签必须在 0..3 之间: {label}")
        bits.extend((label >> 1, label & 1))
    return bits_to_str(bits)


def turns_to_positions(turns: Union[TurnSequence, Sequence[int]]) -> Conformation:
    """沿转向序列行走；第 k 根键（0 起）符号为 (-1)^k"""
    x, y, z = 0, 0, 0
    positions = [(0, 0, 0)]
    for k, t in enumerate(turns):
        s = 1 if k % 2 == 0 else -1
        ax, ay, az = BOND_VECTORS[t]
        x, y, z = x + s * ax, y + s * ay, z + s * az
        positions.append((x, y, z))
    return Conformation(tuple(positions))


def squared_distance(a: Tuple[int, int, int], b: Tuple[int, int, int]) -> int:
    return (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2


def is_self_avoiding(conf: Conformation) -> bool:
    return len(set(conf.positions)) == len(conf.positions)


def no_backtracking(turns: Union[TurnSequence, Sequence[int]]) -> bool:
    t = tuple(turns)
    return all(t[k + 1] != t[k] for k in range(len(t) - 1))


def is_feasible_turns(turns: Union[TurnSequence, Sequence[int]]) -> bool:
    return no_backtracking(turns) and is_self_avoiding(turns_to_positions(turns))


def rotate_turns(turns: Union[TurnSequence, Sequence[int]], perm: Sequence[int]) -> TurnSequence:
    return TurnSequence(tuple(perm[t] for t in turns))


def adjacent_pairs(conf: Conformation) -> List[Tuple[int, int]]:
    """处于最近邻（d²=3）的可接触残基对"""
    pos = conf.positions
    return [(i, j) for i, j in contact_pairs(conf.n) if squared_distance(pos[i - 1], pos[j - 1]) == 3]


def structural_energy(conf: Conformation, peptide: Peptide, matrix: InteractionMatrix) -> float:
    """
    结构能：所有相邻可接触对的 ε_ij 之和

    按有理数精确累加后一次取整，保证与哈密顿量求值逐位一致
    """
    if conf.n != peptide.n:
        raise ValidationError(f"构象珠子数 {conf.n} 与肽链长度 {peptide.n} 不符")
    if not is_self_avoiding(conf):
        raise InfeasibleConformationError("构象存在珠子重叠")
    total = Fraction(0)
    for i, j in adjacent_pairs(conf):
        total += Fraction(matrix.energy(peptide.residues[i - 1], peptide.residues[j - 1]))
    return float(total)


def contacts_from_geometry(conf: Conformation, layout: QubitLayout) -> str:
    """根据三维结构直接读出接触比特串"""
    if conf.n != layout.n_residues:
        raise ValidationError(f"构象珠子数 {conf.n} 与布局残基数 {layout.n_residues} 不符")
    if not is_self_avoiding(conf):
        raise InfeasibleConformationError("构象存在珠子重叠")
    adjacent = set(adjacent_pairs(conf))
    return "".join("1" if p in adjacent else "0" for p in layout.contact_pairs)


def feasible_bitstring(turns: Union[TurnSequence, Sequence[int]], layout: QubitLayout) -> str:
    """转向序列 -> 完整比特串（接触比特取几何一致值）"""
    conf = turns_to_positions(turns)
    return encode_geometry(turns) + contacts_from_geometry(conf, layout)


def random_feasible_turns(rng: np.random.Generator, n_residues: int, max_attempts: int = 1_000_000) -> Optional[TurnSequence]:
    """
    拒绝采样一条均匀分布的自回避、无回溯行走

    每一步在与上一转向不同的标签中均匀选择，因此所有无回溯行走等概率；
    再过滤掉自交者即得到自回避行走上的均匀分布
    """
    for _ in range(max_attempts):
        turns = list(GAUGE_TURNS)
        if n_residues - 1 >= 3:
            # 第3个转向只能取 {0,1}，无回溯时只剩 0
            turns.append(0)
        for _k in range(3, n_residues - 1):
            choices = [t for t in range(4) if t != turns[-1]]
            turns.append(choices[int(rng.integers(3))])
        if is_self_avoiding(turns_to_positions(turns)):
            return TurnSequence(tuple(turns[:n_residues - 1]))
    return None


def closed_form_contact_count(n: int) -> int:
    """|contact_pairs(N)| 的闭式：对奇数间隔 d>=5 求和 (N-d)"""
    return sum(n - d for d in range(5, n) if d % 2 == 1)
