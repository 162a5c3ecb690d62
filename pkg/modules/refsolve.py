"""
经典参考求解器
规范固定下的自回避行走穷举，以及构象空间上的遗传算法
"""

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ValidationError
from .hamiltonian import PenaltyConfig
from .lattice_model import (BOND_VECTORS, GAUGE_TURNS, InteractionMatrix, Peptide, TurnSequence,
                            contact_pairs, random_feasible_turns, squared_distance, turns_to_positions)

logger = logging.getLogger(__name__)

DEFAULT_MAX_N = 12

# 规范前缀：t1=0, t2=1, t3 的高位为 0 且 t3=1 必然回溯
GAUGE_PREFIX = GAUGE_TURNS + (0,)

# 生成一个初始个体时拒绝采样的次数上限
INIT_WALK_ATTEMPTS = 200


@dataclass(frozen=True)
class RefResult:
    """参考能量及其构象"""

    sequence: str
    e_ref: float
    turns: TurnSequence
    method: str
    generations: int = 0
    seed: Optional[int] = None
    history: Tuple[float, ...] = field(default=(), repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {"sequence": self.sequence, "E_ref": self.e_ref, "turns": list(self.turns), "method": self.method,
                "seed": self.seed, "generations": self.generations}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RefResult":
        try:
            return cls(sequence=data["sequence"], e_ref=float(data["E_ref"]),
                       turns=TurnSequence(tuple(data["turns"])), method=data["method"],
                       generations=int(data.get("generations", 0)), seed=data.get("seed"))
        except (KeyError, TypeError) as e:
            raise ValidationError(f"参考结果格式错误: {e}")


def _contact_table(peptide: Peptide, matrix: InteractionMatrix) -> Dict[int, List[Tuple[int, Fraction]]]:
    """珠子 j（1 起）-> [(i, ε_ij)]，只列出可接触对"""
    table: Dict[int, List[Tuple[int, Fraction]]] = {}
    for i, j in contact_pairs(peptide.n):
        eps = Fraction(matrix.energy(peptide.residues[i - 1], peptide.residues[j - 1]))
        table.setdefault(j, []).append((i, eps))
    return table


def exact_enumerate(peptide: Peptide, matrix: InteractionMatrix, max_n: int = DEFAULT_MAX_N) -> RefResult:
    """
    深度优先穷举所有规范固定、无回溯的自回避行走

    同能量时返回字典序最小的转向序列

    Args:
        peptide: 肽链
        matrix: 接触能矩阵
        max_n: 允许的最大残基数

    Returns:
        结构能全局最小值
    """
    n = peptide.n
    if n > max_n:
        raise ValidationError(f"N={n} 超过穷举上限 {max_n}")

    table = _contact_table(peptide, matrix)
    prefix = GAUGE_PREFIX[:n - 1]
    conf = turns_to_positions(prefix)
    positions = list(conf.positions)
    occupied = set(positions)
    if len(occupied) != len(positions):
        raise AssertionError("规范前缀自交")

    def gain(bead: int) -> Fraction:
        total = Fraction(0)
        p = positions[bead - 1]
        for i, eps in table.get(bead, ()):
            if eps and squared_distance(positions[i - 1], p) == 3:
                total += eps
        return total

    energy0 = sum((gain(b) for b in range(1, len(positions) + 1)), Fraction(0))
    turns = list(prefix)
    best: List[Any] = [None, None]
    visited = [0]

    def dfs(energy: Fraction):
        if len(turns) == n - 1:
            visited[0] += 1
            if best[0] is None or energy < best[0]:
                best[0], best[1] = energy, tuple(turns)
            return
        k = len(turns)
        s = 1 if k % 2 == 0 else -1
        x, y, z = positions[-1]
        for label in range(4):
            if label == turns[-1]:
                continue
            ax, ay, az = BOND_VECTORS[label]
            p = (x + s * ax, y + s * ay, z + s * az)
            if p in occupied:
                continue
            turns.append(label)
            positions.append(p)
            occupied.add(p)
            dfs(energy + gain(len(positions)))
            occupied.discard(p)
            positions.pop()
            turns.pop()

    dfs(energy0)
    logger.info(f"穷举完成: {peptide}, {visited[0]} 条自回避行走, E_ref = {float(best[0]):.6f}")
    return RefResult(sequence=str(peptide), e_ref=float(best[0]), turns=TurnSequence(best[1]), method="exact")


@dataclass(frozen=True)
class GAConfig:
    """遗传算法参数；mutation_rate 为 None 时取 1/(N-1)"""

    population: int = 200
    generations: int = 5000
    tournament: int = 3
    crossover_rate: float = 0.9
    mutation_rate: Optional[float] = None
    patience: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise ValidationError(f"种群规模至少为 2: {self.population}")
        if self.generations < 1 or self.patience < 1:
            raise ValidationError("generations 与 patience 至少为 1")
        if self.tournament < 1:
            raise ValidationError(f"锦标赛规模至少为 1: {self.tournament}")
        if not 0 <= self.crossover_rate <= 1:
            raise ValidationError(f"crossover_rate 必须在 [0, 1] 内: {self.crossover_rate}")
        if self.mutation_rate is not None and not 0 <= self.mutation_rate <= 1:
            raise ValidationError(f"mutation_rate 必须在 [0, 1] 内: {self.mutation_rate}")


class _Fitness:
    """构象空间适应度：结构能 + λ·重叠珠子数，带记忆"""

    def __init__(self, peptide: Peptide, matrix: InteractionMatrix):
        self.peptide = peptide
        self.lam = Fraction(PenaltyConfig.default_for(matrix).lambda_overlap)
        self.pairs = [(i, j, Fraction(matrix.energy(peptide.residues[i - 1], peptide.residues[j - 1])))
                      for i, j in contact_pairs(peptide.n)]
        self._memo: Dict[Tuple[int, ...], Tuple[Fraction, int, Fraction]] = {}

    def __call__(self, genome: Tuple[int, ...]) -> Tuple[Fraction, int, Fraction]:
        """返回 (适应度, 重叠数, 结构能)"""
        if genome not in self._memo:
            turns = (GAUGE_PREFIX + genome)[:self.peptide.n - 1]
            pos = turns_to_positions(turns).positions
            overlaps = len(pos) - len(set(pos))
            structural = sum((eps for i, j, eps in self.pairs
                              if eps and squared_distance(pos[i - 1], pos[j - 1]) == 3), Fraction(0))
            self._memo[genome] = (structural + self.lam * overlaps, overlaps, structural)
        return self._memo[genome]


def straight_genome(n: int) -> Tuple[int, ...]:
    """延展链 0,1,0,1,... 去掉规范前缀后的部分"""
    return tuple(k % 2 for k in range(len(GAUGE_PREFIX), n - 1))


def _random_genome(rng: np.random.Generator, n: int, length: int) -> Tuple[int, ...]:
    """初始个体取随机自回避行走，长链上拒绝采样失败时退回随机标签串"""
    turns = random_feasible_turns(rng, n, max_attempts=INIT_WALK_ATTEMPTS)
    if turns is None:
        return tuple(int(v) for v in rng.integers(0, 4, size=length))
    return tuple(turns)[len(GAUGE_PREFIX):]


def genetic_algorithm(peptide: Peptide, matrix: InteractionMatrix, cfg: Optional[GAConfig] = None,
                      initial_population: Optional[Sequence[Sequence[int]]] = None) -> RefResult:
    """
    在自由转向标签串上运行遗传算法

    锦标赛选择、单点交叉、逐位变异，保留 1 个精英；
    连续 patience 代没有改进即视为收敛，返回找到的最优可行构象
    """
    cfg = cfg or GAConfig()
    n = peptide.n
    length = max(0, n - 1 - len(GAUGE_PREFIX))
    mutation = cfg.mutation_rate if cfg.mutation_rate is not None else 1.0 / (n - 1)
    rng = np.random.default_rng(cfg.seed)
    fitness = _Fitness(peptide, matrix)

    if initial_population is not None:
        population = [tuple(int(v) for v in g) for g in initial_population]
        if any(len(g) != length for g in population):
            raise ValidationError(f"初始个体长度必须为 {length}")
    else:
        population = [straight_genome(n)]
        population += [_random_genome(rng, n, length) for _ in range(cfg.population - 1)]

    def key(g):
        return fitness(g)[0], g

    def best_feasible(pop, current):
        for g in pop:
            _fit, overlaps, structural = fitness(g)
            if overlaps == 0 and (current is None or (structural, g) < current):
                current = (structural, g)
        return current

    champion = min(population, key=key)
    feasible = best_feasible(population, best_feasible([straight_genome(n)], None))
    history = [float(feasible[0])]
    stale = 0
    generation = 0

    while generation < cfg.generations and stale < cfg.patience and length > 0:
        generation += 1
        offspring = [champion]
        while len(offspring) < cfg.population:
            parents = []
            for _ in range(2):
                picks = rng.integers(0, len(population), size=cfg.tournament)
                parents.append(min((population[int(i)] for i in picks), key=key))
            a, b = parents
            if length >= 2 and rng.random() < cfg.crossover_rate:
                cut = int(rng.integers(1, length))
                child = a[:cut] + b[cut:]
            else:
                child = a
            genes = list(child)
            for locus in range(length):
                if rng.random() < mutation:
                    genes[locus] = (genes[locus] + int(rng.integers(1, 4))) % 4
            offspring.append(tuple(genes))
        population = offspring

        new_champion = min(population, key=key)
        new_feasible = best_feasible(population, feasible)
        if key(new_champion) < key(champion) or new_feasible[0] < feasible[0]:
            stale = 0
        else:
            stale += 1
        champion, feasible = new_champion, new_feasible
        history.append(float(feasible[0]))

    turns = TurnSequence((GAUGE_PREFIX + feasible[1])[:n - 1])
    logger.info(f"遗传算法: {peptide}, {generation} 代, 最优结构能 {float(feasible[0]):.6f}")
    return RefResult(sequence=str(peptide), e_ref=float(feasible[0]), turns=turns, method="ga",
                     generations=generation, seed=cfg.seed, history=tuple(history))
