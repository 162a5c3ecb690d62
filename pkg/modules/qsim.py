"""
无噪声态矢量后端
偏置驱动基态制备、多比特 Pauli 旋转、Trotter 冲量演化与计算基采样

振幅下标的第 j 位对应第 j 个比特（小端序）
"""

import csv
import functools
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np

from .errors import SimulationCapError, ValidationError
from .hamiltonian import SpinPolynomial
from .pauli_engine import CDTerm, PauliTerm

logger = logging.getLogger(__name__)

MAX_QUBITS = 26

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def index_to_bitstring(index: int, n_q: int) -> str:
    return format(index, f"0{n_q}b")[::-1] if n_q else ""


def bitstring_to_index(bits: str) -> int:
    return int(bits[::-1], 2) if bits else 0


class StateVector:
    """
    2^n_q 个复振幅

    同一时刻只应有一个写者；旋转就地更新
    """

    def __init__(self, amplitudes: np.ndarray, cap: int = MAX_QUBITS):
        amps = np.asarray(amplitudes, dtype=np.complex128)
        n_q = int(round(math.log2(len(amps)))) if len(amps) else -1
        if n_q < 0 or 2 ** n_q != len(amps):
            raise ValidationError(f"振幅个数 {len(amps)} 不是 2 的幂")
        _check_cap(n_q, cap)
        self.n_q = n_q
        self.amplitudes = amps.copy()

    @classmethod
    def basis(cls, bits: str) -> "StateVector":
        amps = np.zeros(2 ** len(bits), dtype=np.complex128)
        amps[bitstring_to_index(bits)] = 1.0
        return cls(amps)

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def expectation_z(self, qubit: int) -> float:
        idx = np.arange(len(self.amplitudes))
        signs = 1 - 2 * ((idx >> qubit) & 1)
        return float(np.sum(signs * self.probabilities()))


def _check_cap(n_q: int, cap: int):
    if n_q > cap:
        raise SimulationCapError(f"{n_q} 个量子比特超出态矢量模拟上限 {cap}，属于硬件规模实例，拒绝模拟")


def _single_qubit_ground(h: float) -> np.ndarray:
    """-X + hZ 的基态，本征值 -√(1+h²)"""
    r = math.sqrt(1.0 + h * h)
    v = np.array([1.0, h + r]) if h >= 0 else np.array([r - h, 1.0])
    return v / np.linalg.norm(v)


def prepare_initial(bias, cap: int = MAX_QUBITS) -> StateVector:
    """
    偏置驱动 Σ_j(-X_j + h_j Z_j) 的基态（直积态）

    Args:
        bias: BiasField 或长度为 n_q 的实数序列
        cap: 比特数上限
    """
    h = np.asarray(getattr(bias, "h", bias), dtype=float)
    _check_cap(len(h), cap)
    factors = [_single_qubit_ground(float(hj)) for hj in h]
    # 小端序：第 0 个比特放在 kron 的最右侧
    amps = functools.reduce(np.kron, reversed(factors), np.array([1.0]))
    return StateVector(amps.astype(np.complex128), cap=cap)


def _pauli_action(n_q: int, term: PauliTerm) -> Tuple[np.ndarray, np.ndarray]:
    """(Pψ)[m] = phase[m] · ψ[m ^ x]，返回 (源下标, 相位)"""
    idx = np.arange(2 ** n_q)
    src = idx ^ term.x
    parity = np.zeros(len(idx), dtype=np.int64)
    z = term.z
    j = 0
    while z:
        if z & 1:
            parity ^= (src >> j) & 1
        z >>= 1
        j += 1
    phase = (1, 1j, -1, -1j)[term.n_y % 4] * (1 - 2 * parity)
    return src, phase


def apply_pauli_rotation(state: StateVector, term: PauliTerm, angle: float) -> StateVector:
    """
    state <- exp(-i·angle·P)·state = cos(angle)ψ - i·sin(angle)·Pψ

    只使用 term 的字母结构，系数由调用方折算进 angle
    """
    if term.n_q != state.n_q:
        raise ValidationError(f"Pauli 串宽度 {term.n_q} 与态矢量 {state.n_q} 不符")
    if not math.isfinite(angle):
        raise ValidationError(f"旋转角必须有限: {angle}")
    if angle == 0:
        return state
    src, phase = _pauli_action(state.n_q, term)
    psi = state.amplitudes
    state.amplitudes = math.cos(angle) * psi - 1j * math.sin(angle) * (phase * psi[src])
    return state


def trotter_impulse(state: StateVector, cd: CDTerm, total_time: float, n_steps: int,
                    theta_prune: float) -> StateVector:
    """
    冲量区间内只保留反绝热项的 Trotter 演化

    第 l 步取 λ_l = (l - ½)/n_steps，依字母串顺序施加 exp(-iΔt·α₁(λ_l)·c·P)；
    |Δt·c| < θ 的项被剪枝
    """
    if n_steps < 1:
        raise ValidationError(f"n_steps 至少为 1: {n_steps}")
    dt = total_time / n_steps
    surviving = cd.surviving(theta_prune, dt)
    if not surviving:
        logger.debug(f"θ={theta_prune} 剪掉了全部反绝热项，演化为恒等")
        return state
    for step in range(1, n_steps + 1):
        lam = (step - 0.5) / n_steps
        a1 = cd.alpha1(lam)
        for term in surviving:
            apply_pauli_rotation(state, term, dt * a1 * term.coeff.real)
    logger.debug(f"Trotter 演化完成: {n_steps} 步, 每步 {len(surviving)} 个旋转")
    return state


@dataclass(frozen=True)
class SampleSet:
    """计算基测量结果，counts 为 {比特串: 次数}"""

    counts: Mapping[str, int]
    n_q: int
    hamiltonian: Optional[SpinPolynomial] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        cleaned = {}
        for bits, c in sorted(self.counts.items()):
            if len(bits) != self.n_q:
                raise ValidationError(f"比特串 '{bits}' 长度与 n_q={self.n_q} 不符")
            if c < 0:
                raise ValidationError(f"计数不能为负: {bits} -> {c}")
            if c:
                cleaned[bits] = int(c)
        object.__setattr__(self, "counts", cleaned)

    @classmethod
    def from_bitstrings(cls, bitstrings: Iterable[str], n_q: int,
                        hamiltonian: Optional[SpinPolynomial] = None) -> "SampleSet":
        counts: Dict[str, int] = {}
        for b in bitstrings:
            counts[b] = counts.get(b, 0) + 1
        return cls(counts, n_q, hamiltonian)

    @property
    def total_shots(self) -> int:
        return sum(self.counts.values())

    def __len__(self) -> int:
        return self.total_shots

    def with_hamiltonian(self, hamiltonian: SpinPolynomial) -> "SampleSet":
        return SampleSet(self.counts, self.n_q, hamiltonian)

    def merge(self, other: "SampleSet") -> "SampleSet":
        if other.n_q != self.n_q:
            raise ValidationError("合并的样本集比特数不一致")
        counts = dict(self.counts)
        for b, c in other.counts.items():
            counts[b] = counts.get(b, 0) + c
        return SampleSet(counts, self.n_q, self.hamiltonian or other.hamiltonian)

    @cached_property
    def energies(self) -> Dict[str, float]:
        if self.hamiltonian is None:
            raise ValidationError("样本集未关联哈密顿量，无法求能量")
        return {b: self.hamiltonian.evaluate(b) for b in self.counts}

    def ranked(self) -> List[Tuple[str, int, float]]:
        """按 (能量, 比特串) 升序的 (比特串, 次数, 能量)"""
        e = self.energies
        return sorted(((b, c, e[b]) for b, c in self.counts.items()), key=lambda r: (r[2], r[0]))

    def shots(self) -> List[str]:
        """按 (能量, 比特串) 升序展开的逐次测量结果"""
        out: List[str] = []
        for b, c, _ in self.ranked():
            out.extend([b] * c)
        return out

    def top(self, k: int) -> "SampleSet":
        """能量最低的 k 次测量"""
        counts: Dict[str, int] = {}
        left = k
        for b, c, _ in self.ranked():
            if left <= 0:
                break
            take = min(c, left)
            counts[b] = take
            left -= take
        return SampleSet(counts, self.n_q, self.hamiltonian)

    def energy_array(self) -> np.ndarray:
        """逐次测量的能量（含重数）"""
        e = self.energies
        return np.array([e[b] for b, c in self.counts.items() for _ in range(c)], dtype=float)

    def mean_energy(self) -> float:
        if not self.counts:
            return float("nan")
        e = self.energies
        return float(sum(e[b] * c for b, c in self.counts.items()) / self.total_shots)

    def bit_matrix(self) -> Tuple[np.ndarray, np.ndarray]:
        """(不同比特串的 0/1 矩阵, 对应次数)"""
        keys = list(self.counts)
        rows = np.array([[int(c) for c in b] for b in keys], dtype=np.int8).reshape(len(keys), self.n_q)
        return rows, np.array([self.counts[b] for b in keys], dtype=np.int64)

    def to_csv(self, path: str):
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["bitstring", "count", "energy"])
            for b, c in self.counts.items():
                energy = repr(self.energies[b]) if self.hamiltonian is not None else ""
                writer.writerow([b, c, energy])

    @classmethod
    def from_csv(cls, path: str, hamiltonian: Optional[SpinPolynomial] = None) -> "SampleSet":
        try:
            with open(path, "r", encoding="utf-8", newline="") as f:
                rows = list(csv.DictReader(f))
        except OSError as e:
            raise ValidationError(f"无法读取样本文件 {path}: {e}")
        counts: Dict[str, int] = {}
        try:
            for row in rows:
                counts[row["bitstring"]] = counts.get(row["bitstring"], 0) + int(row["count"])
        except (KeyError, ValueError) as e:
            raise ValidationError(f"样本文件 {path} 格式错误: {e}")
        if hamiltonian is not None:
            n_q = hamiltonian.n_q
        else:
            n_q = len(next(iter(counts))) if counts else 0
        return cls(counts, n_q, hamiltonian)


def sample(state: StateVector, n_shots: int, seed: SeedLike = None,
           hamiltonian: Optional[SpinPolynomial] = None) -> SampleSet:
    """按 |振幅|² 独立抽取 n_shots 次"""
    if n_shots < 0:
        raise ValidationError(f"n_shots 不能为负: {n_shots}")
    probs = state.probabilities()
    total = probs.sum()
    if abs(total - 1.0) > 1e-8:
        raise ValidationError(f"态矢量未归一化: Σ|a|² = {total}")
    draws = _rng(seed).multinomial(n_shots, probs / total)
    counts = {index_to_bitstring(int(i), state.n_q): int(draws[i]) for i in np.flatnonzero(draws)}
    return SampleSet(counts, state.n_q, hamiltonian)


def exact_distribution(state: StateVector) -> Dict[str, float]:
    probs = state.probabilities()
    return {index_to_bitstring(int(i), state.n_q): float(probs[i]) for i in np.flatnonzero(probs > 0)}
