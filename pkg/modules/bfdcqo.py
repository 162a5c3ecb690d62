"""
偏置场反馈的数字化反绝热量子优化（BF-DCQO）

每一轮：按当前偏置构建驱动与反绝热项，制备初态、做冲量演化并采样，
再用精英样本的磁化更新偏置
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Sequence, Tuple

import numpy as np

from .errors import ValidationError
from .hamiltonian import SpinPolynomial
from .pauli_engine import cd_term, driver, z_poly_to_pauli
from .qsim import MAX_QUBITS, SampleSet, prepare_initial, sample, trotter_impulse

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BiasField:
    """每个比特上的纵向场 h_j"""

    h: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "h", tuple(float(v) for v in self.h))

    @classmethod
    def zeros(cls, n_q: int) -> "BiasField":
        return cls((0.0,) * n_q)

    @property
    def n_q(self) -> int:
        return len(self.h)

    def as_array(self) -> np.ndarray:
        return np.array(self.h, dtype=float)


@dataclass(frozen=True)
class RunConfig:
    """BF-DCQO 参数，默认值与硬件实验一致"""

    rounds: int = 10
    n_shots: int = 5000
    n_elite: int = 100
    k_s: float = 2.0
    total_time: float = 1.0
    n_steps: int = 1
    theta_prune: float = 0.01
    seed: int = 0
    cap: int = MAX_QUBITS

    def __post_init__(self):
        if self.rounds < 1:
            raise ValidationError(f"rounds 至少为 1: {self.rounds}")
        if self.n_shots < 1:
            raise ValidationError(f"n_shots 至少为 1: {self.n_shots}")
        if not 1 <= self.n_elite <= self.n_shots:
            raise ValidationError(f"n_elite 必须在 1..n_shots 之间: {self.n_elite}")
        if not self.k_s > 0:
            raise ValidationError(f"k_s 必须为正: {self.k_s}")
        if not self.total_time > 0:
            raise ValidationError(f"total_time 必须为正: {self.total_time}")
        if self.n_steps < 1:
            raise ValidationError(f"n_steps 至少为 1: {self.n_steps}")
        if not self.theta_prune >= 0:
            raise ValidationError(f"theta_prune 不能为负: {self.theta_prune}")

    @property
    def dt(self) -> float:
        return self.total_time / self.n_steps

    def to_dict(self) -> Dict[str, Any]:
        # JSON 无法表示 inf，写成字符串
        theta = self.theta_prune if math.isfinite(self.theta_prune) else "inf"
        return {"rounds": self.rounds, "n_shots": self.n_shots, "n_elite": self.n_elite, "k_s": self.k_s,
                "total_time": self.total_time, "n_steps": self.n_steps, "theta_prune": theta,
                "seed": self.seed, "cap": self.cap}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunConfig":
        kwargs = dict(data)
        if "theta_prune" in kwargs:
            kwargs["theta_prune"] = float(kwargs["theta_prune"])
        try:
            return cls(**kwargs)
        except TypeError as e:
            raise ValidationError(f"运行配置字段错误: {e}")


@dataclass(frozen=True)
class RoundRecord:
    """单轮记录"""

    index: int
    bias: BiasField
    samples: SampleSet = field(repr=False)
    elite_energies: Tuple[float, ...]
    best_energy: float
    best_bitstring: str
    surviving_terms: int
    gate_estimate: int

    @property
    def mean_energy(self) -> float:
        return self.samples.mean_energy()


def round_rng(seed: int, round_index: int) -> np.random.Generator:
    """按 (主种子, 轮次) 派生独立随机流"""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(round_index)]))


def select_elites(samples: SampleSet, n_elite: int) -> List[str]:
    """
    能量最低的 n_elite 次测量（计重数），同能量按比特串字典序

    Returns:
        长度为 n_elite 的比特串列表
    """
    if n_elite < 1:
        raise ValidationError(f"精英数至少为 1: {n_elite}")
    if samples.total_shots < n_elite:
        raise ValidationError(f"样本只有 {samples.total_shots} 次测量，少于精英数 {n_elite}")
    return samples.shots()[:n_elite]


def update_bias(elites: Sequence[str], k_s: float) -> BiasField:
    """h_j = -K_s·⟨σ_j^z⟩，σ^z = 1 - 2b"""
    if not elites:
        raise ValidationError("精英集合为空，无法更新偏置")
    bits = np.array([[int(c) for c in b] for b in elites], dtype=float)
    magnetization = np.mean(1.0 - 2.0 * bits, axis=0)
    return BiasField(tuple(-k_s * magnetization))


def run(h_f: SpinPolynomial, config: RunConfig) -> List[RoundRecord]:
    """
    执行 R 轮 BF-DCQO

    Args:
        h_f: 问题哈密顿量
        config: 运行参数

    Returns:
        每轮的记录，包含该轮全部样本
    """
    problem = z_poly_to_pauli(h_f)
    bias = BiasField.zeros(h_f.n_q)
    records: List[RoundRecord] = []
    best_energy, best_bits = math.inf, ""

    for r in range(1, config.rounds + 1):
        cd = cd_term(driver(bias), problem)
        state = prepare_initial(bias, cap=config.cap)
        trotter_impulse(state, cd, config.total_time, config.n_steps, config.theta_prune)
        samples = sample(state, config.n_shots, round_rng(config.seed, r), hamiltonian=h_f)

        elites = select_elites(samples, config.n_elite)
        elite_energies = tuple(samples.energies[b] for b in elites)
        round_best, round_bits = elite_energies[0], elites[0]
        if round_best < best_energy:
            best_energy, best_bits = round_best, round_bits

        surviving = len(cd.surviving(config.theta_prune, config.dt))
        records.append(RoundRecord(
            index=r,
            bias=bias,
            samples=samples,
            elite_energies=elite_energies,
            best_energy=best_energy,
            best_bitstring=best_bits,
            surviving_terms=surviving,
            gate_estimate=cd.gate_estimate(config.theta_prune, config.dt, config.n_steps),
        ))
        logger.info(f"第 {r}/{config.rounds} 轮: 平均能量 {samples.mean_energy():.4f}, "
                    f"最优 {best_energy:.4f}, 存活项 {surviving}")

        bias = update_bias(elites, config.k_s)
        logger.debug(f"更新偏置: max|h| = {max((abs(v) for v in bias.h), default=0.0):.4f}")

    return records


def all_samples(records: Sequence[RoundRecord]) -> SampleSet:
    """合并各轮样本"""
    if not records:
        raise ValidationError("没有任何轮次记录")
    merged = records[0].samples
    for rec in records[1:]:
        merged = merged.merge(rec.samples)
    return merged
