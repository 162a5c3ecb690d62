"""
问题哈密顿量 H_f = H_back + H_contact

以 ±1 自旋多项式表示（最高五体项），系数用 Fraction 精确存储，
保证可行构象上的能量与结构能逐位一致
"""

import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import dimod
import numpy as np

from .errors import ValidationError
from .lattice_model import BitsLike, InteractionMatrix, Peptide, QubitLayout, as_bits, qubit_layout

logger = logging.getLogger(__name__)

MAX_DEGREE = 5

Number = Union[int, float, Fraction]

# 内部表示：{比特掩码: 系数}，自旋平方为 1，故乘法即掩码异或
_Poly = Dict[int, Fraction]


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


def _mask(qubits: Iterable[int]) -> int:
    m = 0
    for q in qubits:
        bit = 1 << int(q)
        if m & bit:
            raise ValidationError(f"项中比特 {q} 重复")
        m |= bit
    return m


def _qubits(mask: int) -> Tuple[int, ...]:
    out = []
    j = 0
    while mask:
        if mask & 1:
            out.append(j)
        mask >>= 1
        j += 1
    return tuple(out)


def _bits_mask(bits: Sequence[int]) -> int:
    m = 0
    for j, b in enumerate(bits):
        if b:
            m |= 1 << j
    return m


def _const(c: Number) -> _Poly:
    c = Fraction(c)
    return {0: c} if c else {}


def _var(q: int) -> _Poly:
    return {1 << q: Fraction(1)}


def _accumulate(out: _Poly, m: int, c: Fraction):
    v = out.get(m, 0) + c
    if v:
        out[m] = v
    else:
        out.pop(m, None)


def _add(a: _Poly, b: _Poly, scale: Number = 1) -> _Poly:
    out = dict(a)
    scale = Fraction(scale)
    for m, c in b.items():
        _accumulate(out, m, scale * c)
    return out


def _mul(a: _Poly, b: _Poly) -> _Poly:
    out: _Poly = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            _accumulate(out, ma ^ mb, ca * cb)
    return out


def _scale(a: _Poly, c: Number) -> _Poly:
    c = Fraction(c)
    if not c:
        return {}
    return {m: v * c for m, v in a.items()}


class SpinPolynomial:
    """
    ±1 自旋上的多线性多项式 Σ_S c_S Π_{j∈S} s_j，s_j = 1 - 2·b_j

    构造后不可变，可在线程间共享
    """

    def __init__(self, n_q: int, terms: Optional[Mapping[Iterable[int], Number]] = None):
        if n_q < 0:
            raise ValidationError(f"变量数不能为负: {n_q}")
        poly: _Poly = {}
        for qubits, coeff in (terms or {}).items():
            qs = (qubits,) if isinstance(qubits, int) else tuple(qubits)
            if any(q < 0 or q >= n_q for q in qs):
                raise ValidationError(f"项 {qs} 的比特下标超出 n_q={n_q}")
            _accumulate(poly, _mask(qs), Fraction(coeff))
        self._n_q = n_q
        self._terms = poly

    @classmethod
    def _from_masks(cls, n_q: int, poly: _Poly) -> "SpinPolynomial":
        obj = cls.__new__(cls)
        obj._n_q = n_q
        obj._terms = {m: c for m, c in poly.items() if c}
        return obj

    @property
    def n_q(self) -> int:
        return self._n_q

    @property
    def terms(self) -> Dict[Tuple[int, ...], Fraction]:
        """按 (阶数, 比特) 排序的 {比特元组: 系数}"""
        return {_qubits(m): self._terms[m] for m in self._sorted_masks}

    @cached_property
    def _sorted_masks(self) -> List[int]:
        return sorted(self._terms, key=lambda m: (bin(m).count("1"), _qubits(m)))

    @property
    def degree(self) -> int:
        return max((bin(m).count("1") for m in self._terms), default=0)

    def degree_histogram(self) -> Dict[int, int]:
        hist: Dict[int, int] = {}
        for m in self._terms:
            k = bin(m).count("1")
            hist[k] = hist.get(k, 0) + 1
        return dict(sorted(hist.items()))

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpinPolynomial):
            return NotImplemented
        return self._n_q == other._n_q and self._terms == other._terms

    def __hash__(self):
        return hash((self._n_q, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        return f"SpinPolynomial(n_q={self._n_q}, terms={len(self._terms)}, degree={self.degree})"

    def __add__(self, other: "SpinPolynomial") -> "SpinPolynomial":
        if not isinstance(other, SpinPolynomial):
            return NotImplemented
        n_q = max(self._n_q, other._n_q)
        return SpinPolynomial._from_masks(n_q, _add(self._terms, other._terms))

    def coefficient(self, qubits: Iterable[int]) -> Fraction:
        return self._terms.get(_mask(qubits), Fraction(0))

    def evaluate_exact(self, bits: BitsLike) -> Fraction:
        b = as_bits(bits)
        if len(b) != self._n_q:
            raise ValidationError(f"比特串长度 {len(b)} 与 n_q={self._n_q} 不符")
        x = _bits_mask(b)
        total = Fraction(0)
        for m in self._sorted_masks:
            c = self._terms[m]
            total += -c if _parity(m & x) else c
        return total

    def evaluate(self, bits: BitsLike) -> float:
        return float(self.evaluate_exact(bits))

    def energies(self, bitstrings: Sequence[str]) -> np.ndarray:
        """
        批量求能量（浮点路径）

        按排序后的项依次累加，结果只依赖输入，不依赖调用方式
        """
        if len(bitstrings) == 0:
            return np.zeros(0)
        rows = np.array([as_bits(b) for b in bitstrings], dtype=np.int8)
        if rows.shape[1] != self._n_q:
            raise ValidationError(f"比特串长度 {rows.shape[1]} 与 n_q={self._n_q} 不符")
        spins = 1.0 - 2.0 * rows
        out = np.zeros(len(bitstrings))
        for m in self._sorted_masks:
            c = float(self._terms[m])
            idx = list(_qubits(m))
            if idx:
                out += c * np.prod(spins[:, idx], axis=1)
            else:
                out += c
        return out

    @cached_property
    def _terms_by_qubit(self) -> Dict[int, List[Tuple[int, Fraction]]]:
        index: Dict[int, List[Tuple[int, Fraction]]] = {}
        for m in self._sorted_masks:
            for q in _qubits(m):
                index.setdefault(q, []).append((m, self._terms[m]))
        return index

    def flip_delta(self, bits: BitsLike, qubit: int) -> Fraction:
        """翻转第 qubit 位带来的能量变化 E(x^j) - E(x)"""
        x = _bits_mask(as_bits(bits))
        delta = Fraction(0)
        for m, c in self._terms_by_qubit.get(qubit, ()):
            delta += 2 * c if _parity(m & x) else -2 * c
        return delta

    def restrict(self, fixed: Mapping[int, int]) -> "SpinPolynomial":
        """把给定比特固定为 0/1 后得到的多项式（变量编号不变）"""
        fixed_mask = _mask(fixed)
        ones = sum(1 << q for q, b in fixed.items() if b)
        out: _Poly = {}
        for m, c in self._terms.items():
            part = m & fixed_mask
            v = -c if _parity(part & ones) else c
            _accumulate(out, m & ~fixed_mask, v)
        return SpinPolynomial._from_masks(self._n_q, out)

    def coupling_support(self) -> List[Tuple[int, ...]]:
        """所有非常数项的支撑集"""
        return [_qubits(m) for m in self._sorted_masks if m]

    def to_dict(self) -> Dict:
        return {
            "n_q": self._n_q,
            "terms": [{"qubits": list(_qubits(m)), "coeff": float(self._terms[m])} for m in self._sorted_masks],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "SpinPolynomial":
        try:
            n_q = int(data["n_q"])
            terms: Dict[Tuple[int, ...], Fraction] = {}
            for entry in data["terms"]:
                key = tuple(sorted(int(q) for q in entry["qubits"]))
                terms[key] = terms.get(key, Fraction(0)) + Fraction(float(entry["coeff"]))
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"哈密顿量 JSON 格式错误: {e}")
        return cls(n_q, terms)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SpinPolynomial":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValidationError(f"哈密顿量文件不是合法 JSON: {e}")
        return cls.from_dict(data)

    def to_binary_polynomial(self) -> dimod.BinaryPolynomial:
        """转为 SPIN 型 dimod.BinaryPolynomial，变量标签即比特下标"""
        return dimod.BinaryPolynomial(
            {_qubits(m): float(self._terms[m]) for m in self._sorted_masks}, dimod.SPIN)

    @classmethod
    def from_binary_polynomial(cls, poly: dimod.BinaryPolynomial, n_q: int) -> "SpinPolynomial":
        if poly.vartype is dimod.BINARY:
            poly = poly.to_spin()
        terms: Dict[Tuple[int, ...], Fraction] = {}
        for term, bias in poly.items():
            key = tuple(sorted(int(v) for v in term))
            terms[key] = terms.get(key, Fraction(0)) + Fraction(float(bias))
        return cls(n_q, terms)


@dataclass(frozen=True)
class PenaltyConfig:
    """三类惩罚系数，均须为正"""

    lambda_back: float
    lambda_mismatch: float
    lambda_overlap: float

    def __post_init__(self):
        for name in ("lambda_back", "lambda_mismatch", "lambda_overlap"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValidationError(f"{name} 必须为正数: {value}")

    @classmethod
    def default_for(cls, matrix: InteractionMatrix) -> "PenaltyConfig":
        """默认 10·max|ε|；全零矩阵时取 10"""
        lam = 10.0 * matrix.max_abs
        if lam == 0:
            lam = 10.0
        return cls(lam, lam, lam)

    def to_dict(self) -> Dict[str, float]:
        return {"lambda_back": self.lambda_back, "lambda_mismatch": self.lambda_mismatch,
                "lambda_overlap": self.lambda_overlap}


class _TurnAlgebra:
    """转向的自旋表示与键矢量、距离平方的多项式"""

    def __init__(self, layout: QubitLayout):
        self.layout = layout
        self._bonds: Dict[int, Tuple[_Poly, _Poly, _Poly]] = {}
        self._d2: Dict[Tuple[int, int], _Poly] = {}

    def spins(self, k: int) -> Tuple[_Poly, _Poly]:
        """第 k 个转向的 (s_hi, s_lo)；规范固定位为常数"""
        hi_q, lo_q = self.layout.turn_qubits(k)
        hi = _var(hi_q) if hi_q is not None else _const(1)
        if lo_q is not None:
            lo = _var(lo_q)
        else:
            # 第1个转向标签 0 (lo=0)，第2个转向标签 1 (lo=1)
            lo = _const(1 if k == 1 else -1)
        return hi, lo

    def bond(self, k: int) -> Tuple[_Poly, _Poly, _Poly]:
        if k not in self._bonds:
            hi, lo = self.spins(k)
            sign = 1 if k % 2 == 1 else -1
            self._bonds[k] = (_scale(hi, sign), _scale(lo, sign), _scale(_mul(hi, lo), sign))
        return self._bonds[k]

    def squared_distance(self, i: int, j: int) -> _Poly:
        """珠子 i、j（1 起）之间的距离平方"""
        if (i, j) not in self._d2:
            total: _Poly = {}
            for axis in range(3):
                delta: _Poly = {}
                for k in range(i, j):
                    delta = _add(delta, self.bond(k)[axis])
                total = _add(total, _mul(delta, delta))
            self._d2[(i, j)] = total
        return self._d2[(i, j)]

    def equal_turns(self, k: int) -> _Poly:
        """δ(t_k = t_{k+1}) = (1 + s_hi s_hi')/2 · (1 + s_lo s_lo')/2"""
        hi1, lo1 = self.spins(k)
        hi2, lo2 = self.spins(k + 1)
        same_hi = _scale(_add(_const(1), _mul(hi1, hi2)), Fraction(1, 2))
        same_lo = _scale(_add(_const(1), _mul(lo1, lo2)), Fraction(1, 2))
        return _mul(same_hi, same_lo)


def _check_degree(poly: _Poly, what: str):
    deg = max((bin(m).count("1") for m in poly), default=0)
    if deg > MAX_DEGREE:
        raise AssertionError(f"{what} 出现 {deg} 体项")


def build_backbone(n: int, penalties: PenaltyConfig) -> SpinPolynomial:
    """
    回溯惩罚 λ_back · Σ_k δ(t_k = t_{k+1})，只作用于几何比特

    Args:
        n: 残基数 N
        penalties: 惩罚系数

    Returns:
        至多四体的自旋多项式
    """
    layout = qubit_layout(n)
    algebra = _TurnAlgebra(layout)
    poly: _Poly = {}
    for k in range(1, n - 1):
        poly = _add(poly, algebra.equal_turns(k), Fraction(penalties.lambda_back))
    _check_degree(poly, "回溯项")
    logger.debug(f"H_back: N={n}, {len(poly)} 项")
    return SpinPolynomial._from_masks(layout.n_q, poly)


def _neighbour_pairs(i: int, j: int, n: int) -> List[Tuple[int, int]]:
    """与 (i, j) 相差一个珠子的同子格对，用于重叠惩罚"""
    out = []
    for a, b in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
        if 1 <= a and b <= n and b - a >= 4:
            out.append((a, b))
    return out


def build_contact(peptide: Peptide, matrix: InteractionMatrix, penalties: PenaltyConfig) -> SpinPolynomial:
    """
    接触项：对每个可接触对 (i, j)，以接触指示量 n = (1 - s_q)/2 乘以

        ε_ij + λ_mismatch·(d²_ij - 3) + λ_overlap·Σ_nbr (8 - d²_ab)/16

    奇数间隔珠子的 d² ∈ {3, 11, 19, ...}，偶数间隔的 d² ∈ {0, 8, 16, ...}；
    因此失配项在相邻时为零、否则至少为 8，重叠项在 d²_ab = 0 时为 1/2，
    在 d²_ab = 8 时为零，在更远处为负但被失配项压住

    重叠只在激活接触旁受罚，保持总次数不超过 5。规范固定后 N ≤ 7 的链不可能重叠；
    N ≥ 8 起可以重叠，远离激活接触的重叠不受罚（N=11 已有能量等于可行基态的重叠态），
    因此采样结果都要经过可行性检查
    """
    layout = qubit_layout(peptide)
    algebra = _TurnAlgebra(layout)
    lam_m = Fraction(penalties.lambda_mismatch)
    lam_o = Fraction(penalties.lambda_overlap)

    poly: _Poly = {}
    for i, j in layout.contact_pairs:
        q = layout.contact_qubit((i, j))
        indicator = _scale(_add(_const(1), _var(q), -1), Fraction(1, 2))

        eps = Fraction(matrix.energy(peptide.residues[i - 1], peptide.residues[j - 1]))
        inner = _const(eps)
        inner = _add(inner, _add(algebra.squared_distance(i, j), _const(-3)), lam_m)
        for a, b in _neighbour_pairs(i, j, peptide.n):
            overlap = _add(_const(8), algebra.squared_distance(a, b), -1)
            inner = _add(inner, overlap, lam_o / 16)

        poly = _add(poly, _mul(indicator, inner))

    _check_degree(poly, "接触项")
    logger.debug(f"H_contact: {peptide}, {len(layout.contact_pairs)} 个接触对, {len(poly)} 项")
    return SpinPolynomial._from_masks(layout.n_q, poly)


def build_total(peptide: Peptide, matrix: InteractionMatrix,
                penalties: Optional[PenaltyConfig] = None) -> SpinPolynomial:
    """H_f = H_back + H_contact"""
    penalties = penalties or PenaltyConfig.default_for(matrix)
    total = build_backbone(peptide.n, penalties) + build_contact(peptide, matrix, penalties)
    logger.info(f"已构建哈密顿量: {peptide}, n_q={total.n_q}, {len(total)} 项, 最高 {total.degree} 体")
    return total


def evaluate(poly: SpinPolynomial, bits: BitsLike) -> float:
    """Σ_S c_S Π_{j∈S}(1 - 2b_j)，有理数精确累加后转为浮点"""
    return poly.evaluate(bits)


def load_hamiltonian(path: str) -> SpinPolynomial:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return SpinPolynomial.from_json(f.read())
    except OSError as e:
        raise ValidationError(f"无法读取哈密顿量文件 {path}: {e}")


__all__ = [
    "MAX_DEGREE", "SpinPolynomial", "PenaltyConfig", "build_backbone", "build_contact", "build_total",
    "evaluate", "load_hamiltonian",
]
