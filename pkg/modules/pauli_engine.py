"""
Pauli 串代数

每个 Pauli 串用 (x 掩码, z 掩码) 两个整数表示，Y 同时置位；
乘积的相位由逐位统计得到，不依赖稠密矩阵
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np

from .errors import DegenerateInstanceError, ValidationError
from .hamiltonian import SpinPolynomial

logger = logging.getLogger(__name__)

# 合并后绝对值低于此阈值的系数视为抵消
COEFF_TOL = 1e-12

_PHASES = (1, 1j, -1, -1j)

Key = Tuple[int, int]


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _product(x1: int, z1: int, x2: int, z2: int) -> Tuple[complex, int, int]:
    """P1·P2 = phase · P3，逐位套用 XY=iZ, YZ=iX, ZX=iY 及其反序"""
    X1, Y1, Z1 = x1 & ~z1, x1 & z1, z1 & ~x1
    X2, Y2, Z2 = x2 & ~z2, x2 & z2, z2 & ~x2
    plus = _popcount(X1 & Y2) + _popcount(Y1 & Z2) + _popcount(Z1 & X2)
    minus = _popcount(X1 & Z2) + _popcount(Y1 & X2) + _popcount(Z1 & Y2)
    return _PHASES[(plus - minus) % 4], x1 ^ x2, z1 ^ z2


def _anticommute(x1: int, z1: int, x2: int, z2: int) -> bool:
    return _popcount((x1 & z2) ^ (z1 & x2)) % 2 == 1


def letters_to_key(letters: str) -> Key:
    x = z = 0
    for j, c in enumerate(letters.upper()):
        if c == "X":
            x |= 1 << j
        elif c == "Z":
            z |= 1 << j
        elif c == "Y":
            x |= 1 << j
            z |= 1 << j
        elif c != "I":
            raise ValidationError(f"非法 Pauli 字母 '{c}'")
    return x, z


def key_to_letters(key: Key, n_q: int) -> str:
    x, z = key
    out = []
    for j in range(n_q):
        bx, bz = (x >> j) & 1, (z >> j) & 1
        out.append("IXZY"[bx + 2 * bz])
    return "".join(out)


@dataclass(frozen=True)
class PauliTerm:
    """单个 Pauli 串及其系数，letters 的第 j 个字符作用在第 j 个比特上"""

    x: int
    z: int
    n_q: int
    coeff: complex = 1.0

    @classmethod
    def from_letters(cls, letters: str, coeff: complex = 1.0) -> "PauliTerm":
        x, z = letters_to_key(letters)
        return cls(x, z, len(letters), coeff)

    @property
    def key(self) -> Key:
        return self.x, self.z

    @property
    def letters(self) -> str:
        return key_to_letters(self.key, self.n_q)

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def n_y(self) -> int:
        return _popcount(self.x & self.z)

    def __str__(self) -> str:
        return f"{self.coeff} {self.letters}"


class PauliSum:
    """
    Pauli 串的线性组合，构造时合并同类项

    Args:
        n_q: 比特数
        terms: {(x, z): 系数} 或 {字母串: 系数}
    """

    def __init__(self, n_q: int, terms: Mapping[Union[Key, str], complex] = None):
        self._n_q = n_q
        acc: Dict[Key, complex] = {}
        for key, coeff in (terms or {}).items():
            if isinstance(key, str):
                if len(key) != n_q:
                    raise ValidationError(f"Pauli 串 '{key}' 长度与 n_q={n_q} 不符")
                key = letters_to_key(key)
            acc[key] = acc.get(key, 0) + complex(coeff)
        self._terms = {k: v for k, v in acc.items() if abs(v) > COEFF_TOL}

    @classmethod
    def _wrap(cls, n_q: int, acc: Dict[Key, complex]) -> "PauliSum":
        obj = cls.__new__(cls)
        obj._n_q = n_q
        obj._terms = {k: v for k, v in acc.items() if abs(v) > COEFF_TOL}
        return obj

    @property
    def n_q(self) -> int:
        return self._n_q

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self.terms())

    def items(self) -> List[Tuple[Key, complex]]:
        return [(k, self._terms[k]) for k in self._sorted_keys]

    @cached_property
    def _sorted_keys(self) -> List[Key]:
        return sorted(self._terms, key=lambda k: key_to_letters(k, self._n_q))

    def terms(self) -> List[PauliTerm]:
        """按字母串排序的项"""
        return [PauliTerm(x, z, self._n_q, c) for (x, z), c in self.items()]

    def coefficient(self, letters: str) -> complex:
        return self._terms.get(letters_to_key(letters), 0j)

    def is_diagonal(self) -> bool:
        return all(x == 0 for x, _ in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def norm_sq(self) -> float:
        """Σ|c|²，即 tr(M†M)/2^n"""
        return float(sum(abs(c) ** 2 for c in self._terms.values()))

    def scale(self, factor: complex) -> "PauliSum":
        return PauliSum._wrap(self._n_q, {k: factor * v for k, v in self._terms.items()})

    def __neg__(self) -> "PauliSum":
        return self.scale(-1)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        _check_width(self, other)
        acc = dict(self._terms)
        for k, v in other._terms.items():
            acc[k] = acc.get(k, 0) + v
        return PauliSum._wrap(self._n_q, acc)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (-other)

    def __mul__(self, other: "PauliSum") -> "PauliSum":
        _check_width(self, other)
        acc: Dict[Key, complex] = {}
        for (x1, z1), a in self.items():
            for (x2, z2), b in other.items():
                phase, x, z = _product(x1, z1, x2, z2)
                acc[(x, z)] = acc.get((x, z), 0) + phase * a * b
        return PauliSum._wrap(self._n_q, acc)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        if self._n_q != other._n_q or set(self._terms) != set(other._terms):
            return False
        return all(abs(self._terms[k] - other._terms[k]) <= COEFF_TOL for k in self._terms)

    def allclose(self, other: "PauliSum", atol: float = 1e-10) -> bool:
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0) - other._terms.get(k, 0)) <= atol for k in keys)

    def to_text(self) -> str:
        """调试输出，每行 "coeff letters" """
        lines = []
        for term in self.terms():
            c = term.coeff
            value = f"{c.real:.12g}" if c.imag == 0 else f"{c.real:.12g}{c.imag:+.12g}j"
            lines.append(f"{value} {term.letters}")
        return "\n".join(lines)

    def __repr__(self) -> str:
        return f"PauliSum(n_q={self._n_q}, terms={len(self._terms)})"


def _check_width(a: PauliSum, b: PauliSum):
    if a.n_q != b.n_q:
        raise ValidationError(f"比特数不一致: {a.n_q} != {b.n_q}")


def z_poly_to_pauli(poly: SpinPolynomial) -> PauliSum:
    """自旋多项式 -> Z 串之和，{j...}: c 对应 c·Z_j..."""
    acc: Dict[Key, complex] = {}
    for qubits, coeff in poly.terms.items():
        z = 0
        for q in qubits:
            z |= 1 << q
        acc[(0, z)] = complex(float(coeff))
    return PauliSum._wrap(poly.n_q, acc)


def driver(bias: Union[Sequence[float], np.ndarray, "object"]) -> PauliSum:
    """
    带偏置场的驱动哈密顿量 Σ_j (-X_j + h_j Z_j)

    Args:
        bias: BiasField 或长度为 n_q 的实数序列
    """
    h = np.asarray(getattr(bias, "h", bias), dtype=float)
    acc: Dict[Key, complex] = {}
    for j, hj in enumerate(h):
        acc[(1 << j, 0)] = -1.0
        if hj != 0:
            acc[(0, 1 << j)] = complex(hj)
    return PauliSum._wrap(len(h), acc)


def commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """[A, B]：仅反对易的串对有贡献，贡献为 2ab·PQ"""
    _check_width(a, b)
    acc: Dict[Key, complex] = {}
    for (x1, z1), ca in a.items():
        for (x2, z2), cb in b.items():
            if not _anticommute(x1, z1, x2, z2):
                continue
            phase, x, z = _product(x1, z1, x2, z2)
            acc[(x, z)] = acc.get((x, z), 0) + 2 * phase * ca * cb
    return PauliSum._wrap(a.n_q, acc)


def _as_diagonal(h_f: Union[SpinPolynomial, PauliSum]) -> PauliSum:
    if isinstance(h_f, SpinPolynomial):
        return z_poly_to_pauli(h_f)
    if not h_f.is_diagonal():
        raise ValidationError("问题哈密顿量必须是对角的（只含 I/Z）")
    return h_f


@dataclass
class CDTerm:
    """
    一阶反绝热项 A_λ = α₁(λ)·pauli，其中 pauli = i[H_i, H_f] 为实系数

    嵌套对易子的范数按需计算并缓存；偏置改变时应重新构建
    """

    pauli: PauliSum
    h_i: PauliSum
    h_f: PauliSum
    r_coeffs: Dict[str, float] = field(default_factory=dict)

    @cached_property
    def _first(self) -> PauliSum:
        return commutator(self.h_i, self.h_f)

    @cached_property
    def norm_first(self) -> float:
        return self._first.norm_sq()

    @cached_property
    def norm_driver_nested(self) -> float:
        return commutator(self.h_i, self._first).norm_sq()

    @cached_property
    def norm_problem_nested(self) -> float:
        return commutator(self.h_f, self._first).norm_sq()

    def alpha1(self, lam: float) -> float:
        """α₁(λ) = -‖C‖² / ((1-λ)‖[H_i,C]‖² + λ‖[H_f,C]‖²)，C = [H_i, H_f]"""
        if not 0 <= lam <= 1:
            raise ValidationError(f"λ 必须在 [0, 1] 内: {lam}")
        denom = (1 - lam) * self.norm_driver_nested + lam * self.norm_problem_nested
        if denom <= 0:
            raise DegenerateInstanceError(f"α₁ 的分母为零 (λ={lam})")
        return -self.norm_first / denom

    def terms(self) -> List[PauliTerm]:
        return self.pauli.terms()

    def surviving(self, theta: float, dt: float) -> List[PauliTerm]:
        """|Δt·r| >= θ 的项，按字母串排序"""
        return [t for t in self.pauli.terms() if abs(dt * t.coeff.real) >= theta]

    def gate_estimate(self, theta: float, dt: float, n_steps: int) -> int:
        """每步每个存活的多体项（权重 >= 2）计 2 个纠缠门"""
        multi = sum(1 for t in self.surviving(theta, dt) if t.weight >= 2)
        return 2 * multi * n_steps


def cd_term(h_i: PauliSum, h_f: Union[SpinPolynomial, PauliSum]) -> CDTerm:
    """
    构造一阶反绝热项

    对 H_f 中每一项 c·Z_S 和每个 j∈S，-X_j 贡献 -2c·Y_j Z_{S∖j}；
    驱动中的 Z 偏置与 H_f 对易，只通过 α₁ 起作用
    """
    diag = _as_diagonal(h_f)
    _check_width(h_i, diag)
    pauli = commutator(h_i, diag).scale(1j)

    real_terms: Dict[Key, complex] = {}
    for (x, z), c in pauli.items():
        if abs(c.imag) > COEFF_TOL * max(1.0, abs(c.real)):
            raise AssertionError(f"反绝热项出现复系数: {c}")
        if _popcount(x & z) != 1 or x & ~z:
            raise AssertionError(f"反绝热项的串不是单 Y 形式: {key_to_letters((x, z), h_i.n_q)}")
        real_terms[(x, z)] = complex(c.real)
    pauli = PauliSum._wrap(h_i.n_q, real_terms)

    cd = CDTerm(pauli=pauli, h_i=h_i, h_f=diag,
                r_coeffs={t.letters: abs(t.coeff.real) for t in pauli.terms()})
    logger.debug(f"反绝热项: {len(pauli)} 个 Pauli 串")
    return cd


def alpha1(h_i: PauliSum, h_f: Union[SpinPolynomial, PauliSum], lam: float) -> float:
    return cd_term(h_i, h_f).alpha1(lam)


def count_terms(h_f: SpinPolynomial, thetas: Iterable[float], dt: float = 1.0) -> Dict[float, int]:
    """只做符号计数：零偏置下各剪枝阈值对应的存活项数"""
    cd = cd_term(driver(np.zeros(h_f.n_q)), h_f)
    return {theta: len(cd.surviving(theta, dt)) for theta in thetas}
