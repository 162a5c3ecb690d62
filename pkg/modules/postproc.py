"""
经典后处理
共识流程、逐样本修复、接触比特条件最优、均匀随机基线与接触极化诊断
"""

import csv
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import EmptyResultError, InfeasibleConformationError, PoolExhaustedError, ValidationError
from .hamiltonian import SpinPolynomial
from .lattice_model import (QubitLayout, TurnSequence, bits_to_str, contacts_from_geometry, decode_geometry,
                            encode_geometry, is_feasible_turns, random_feasible_turns, turns_to_positions)
from .qsim import SampleSet

logger = logging.getLogger(__name__)

# 单个耦合分量允许穷举的最大比特数
MAX_COMPONENT = 20

# 各流程计算 E_avg 的阶段
FINAL_STAGE = {"consensus": "final", "repair": "descended"}


@dataclass(frozen=True)
class ConsensusConfig:
    """共识流程参数"""

    k: int = 2000
    pool_size: int = 200
    max_attempts: int = 1_000_000
    max_stale: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError(f"k 至少为 1: {self.k}")
        if self.pool_size < 1:
            raise ValidationError(f"pool_size 至少为 1: {self.pool_size}")
        if self.max_attempts < 1 or self.max_stale < 1:
            raise ValidationError("max_attempts 与 max_stale 至少为 1")

    def to_dict(self) -> Dict[str, int]:
        return {"k": self.k, "pool_size": self.pool_size, "max_attempts": self.max_attempts,
                "max_stale": self.max_stale, "seed": self.seed}


@dataclass
class PipelineResult:
    """
    后处理结果

    stages 为 {阶段名: 能量列表（含重数）}，阶段顺序即处理顺序；
    final_stage 指定 E_avg 所用的阶段
    """

    method: str
    final_bitstring: str
    final_energy: float
    stages: Dict[str, List[float]] = field(default_factory=dict)
    feasibility_fraction: float = 0.0
    polarization: Tuple[float, ...] = ()
    final_stage: str = ""

    def __post_init__(self):
        if not self.final_stage:
            self.final_stage = FINAL_STAGE.get(self.method, "")
        if self.stages and self.final_stage not in self.stages:
            raise ValidationError(f"未知的最终阶段 '{self.final_stage}'，现有阶段: {list(self.stages)}")

    @property
    def e_best(self) -> float:
        return self.final_energy

    @property
    def e_avg(self) -> float:
        last = self.stages.get(self.final_stage, [])
        return float(np.mean(last)) if last else float("nan")

    def to_dict(self) -> Dict[str, Any]:
        # 阶段写成列表，JSON 按键排序时顺序不变
        return {
            "method": self.method,
            "final_bitstring": self.final_bitstring,
            "final_energy": self.final_energy,
            "final_stage": self.final_stage,
            "e_best": self.e_best,
            "e_avg": self.e_avg,
            "feasibility_fraction": self.feasibility_fraction,
            "polarization": list(self.polarization),
            "stages": [{"stage": name, "energies": list(values)} for name, values in self.stages.items()],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PipelineResult":
        raw_stages = data.get("stages", [])
        if isinstance(raw_stages, dict):
            raw_stages = [{"stage": k, "energies": v} for k, v in raw_stages.items()]
        return cls(
            method=data["method"],
            final_bitstring=data["final_bitstring"],
            final_energy=float(data["final_energy"]),
            stages={s["stage"]: [float(v) for v in s["energies"]] for s in raw_stages},
            feasibility_fraction=float(data.get("feasibility_fraction", 0.0)),
            polarization=tuple(float(v) for v in data.get("polarization", ())),
            final_stage=data.get("final_stage", ""),
        )

    def stage_rows(self) -> List[Tuple[str, float, int]]:
        """(阶段, 能量, 次数)，同阶段内按能量升序"""
        rows = []
        for name, values in self.stages.items():
            counts: Dict[float, int] = {}
            for v in values:
                counts[v] = counts.get(v, 0) + 1
            rows.extend((name, e, c) for e, c in sorted(counts.items()))
        return rows

    def write_stage_csv(self, path: str):
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["stage", "energy", "count"])
            for name, e, c in self.stage_rows():
                writer.writerow([name, repr(e), c])


def feasible_geometry(bits: str, layout: QubitLayout) -> Optional[TurnSequence]:
    """比特串的几何部分可行（无回溯且自回避）时返回转向序列"""
    geom, _ = layout.split(bits)
    turns = decode_geometry(geom, layout.n_residues)
    return turns if is_feasible_turns(turns) else None


def is_consistent(bits: str, layout: QubitLayout) -> bool:
    """几何可行，且置 1 的接触比特都对应几何上相邻的残基对"""
    turns = feasible_geometry(bits, layout)
    if turns is None:
        return False
    geometric = contacts_from_geometry(turns_to_positions(turns), layout)
    return all(g == "1" for c, g in zip(bits[layout.n_geom:], geometric) if c == "1")


def _contact_components(poly: SpinPolynomial, contact_qubits: Sequence[int]) -> List[List[int]]:
    parent = {q: q for q in contact_qubits}

    def find(q):
        while parent[q] != q:
            parent[q] = parent[parent[q]]
            q = parent[q]
        return q

    for support in poly.coupling_support():
        qs = [q for q in support if q in parent]
        for a, b in zip(qs, qs[1:]):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

    groups: Dict[int, List[int]] = {}
    for q in contact_qubits:
        groups.setdefault(find(q), []).append(q)
    return sorted(groups.values())


def repair_contacts(geometry: TurnSequence, h_f: SpinPolynomial, layout: QubitLayout) -> str:
    """
    固定几何后接触比特的条件最优

    接触比特之间没有耦合时逐个取符号；否则对耦合图的每个连通分量穷举，
    同能量时取字典序最小者
    """
    if not is_feasible_turns(geometry):
        raise InfeasibleConformationError(f"几何不可行: {tuple(geometry)}")
    geom_bits = encode_geometry(geometry)
    restricted = h_f.restrict({q: int(b) for q, b in enumerate(geom_bits)})
    contact_qubits = list(range(layout.n_geom, layout.n_q))
    terms = restricted.terms

    out = {}
    for comp in _contact_components(restricted, contact_qubits):
        if len(comp) == 1:
            q = comp[0]
            # 能量 c·s，s = -1 对应比特 1
            out[q] = 1 if terms.get((q,), 0) > 0 else 0
            continue
        if len(comp) > MAX_COMPONENT:
            raise ValidationError(f"接触耦合分量过大 ({len(comp)} 个比特)，无法穷举")
        logger.debug(f"接触比特存在耦合，穷举分量 {comp}")
        members = set(comp)
        comp_terms = [(qs, c) for qs, c in terms.items() if qs and set(qs) <= members]
        best_key = None
        for assignment in itertools.product((0, 1), repeat=len(comp)):
            spin = {q: 1 - 2 * b for q, b in zip(comp, assignment)}
            energy = sum(c * math.prod(spin[q] for q in qs) for qs, c in comp_terms)
            key = (energy, assignment)
            if best_key is None or key < best_key:
                best_key = key
        out.update(zip(comp, best_key[1]))
    return "".join(str(out[q]) for q in contact_qubits)


class _RepairCache:
    """按几何缓存接触修复结果"""

    def __init__(self, h_f: SpinPolynomial, layout: QubitLayout):
        self.h_f = h_f
        self.layout = layout
        self._cache: Dict[Tuple[int, ...], str] = {}

    def __call__(self, turns: TurnSequence) -> str:
        key = tuple(turns)
        if key not in self._cache:
            self._cache[key] = encode_geometry(turns) + repair_contacts(turns, self.h_f, self.layout)
        return self._cache[key]


def contact_polarization(samples: SampleSet, layout: QubitLayout, top_k: Optional[int] = None) -> np.ndarray:
    """能量最低的 top_k 次测量中，各接触比特取 1 的比例"""
    chosen = samples.top(top_k) if top_k is not None else samples
    if chosen.total_shots == 0 or layout.n_contact == 0:
        return np.zeros(layout.n_contact)
    rows, counts = chosen.bit_matrix()
    ones = counts @ rows[:, layout.n_geom:]
    return ones / chosen.total_shots


def polarization_strength(values: Sequence[float]) -> float:
    """mean |p - 0.5|"""
    if len(values) == 0:
        return 0.0
    return float(np.mean(np.abs(np.asarray(values) - 0.5)))


def feasibility_fraction(samples: SampleSet, layout: QubitLayout) -> float:
    total = samples.total_shots
    if total == 0:
        return 0.0
    ok = sum(c for b, c in samples.counts.items() if feasible_geometry(b, layout) is not None)
    return ok / total


def random_baseline(n_samples: int, n_q: int, seed: int = 0,
                    hamiltonian: Optional[SpinPolynomial] = None) -> SampleSet:
    """n_samples 个独立均匀随机比特串"""
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(n_samples, n_q))
    return SampleSet.from_bitstrings((bits_to_str(row) for row in bits), n_q, hamiltonian)


def _geometry_pool(samples: SampleSet, layout: QubitLayout, cfg: ConsensusConfig,
                   rng: np.random.Generator) -> Tuple[List[TurnSequence], int]:
    """样本中的可行几何（能量升序）优先，不足时用随机自回避行走补齐"""
    pool: List[TurnSequence] = []
    seen = set()
    for bits, _count, _energy in samples.ranked():
        if len(pool) >= cfg.pool_size:
            break
        turns = feasible_geometry(bits, layout)
        if turns is not None and tuple(turns) not in seen:
            seen.add(tuple(turns))
            pool.append(turns)
    from_samples = len(pool)

    attempts = stale = 0
    while len(pool) < cfg.pool_size and attempts < cfg.max_attempts and stale < cfg.max_stale:
        attempts += 1
        turns = random_feasible_turns(rng, layout.n_residues, max_attempts=1)
        if turns is None or tuple(turns) in seen:
            stale += 1
            continue
        stale = 0
        seen.add(tuple(turns))
        pool.append(turns)

    if not pool:
        raise PoolExhaustedError(f"尝试 {attempts} 次后仍无法构造任何可行几何")
    if len(pool) < cfg.pool_size:
        logger.warning(f"几何候选池只有 {len(pool)} 个（目标 {cfg.pool_size}）")
    return pool, from_samples


def consensus_pipeline(samples: SampleSet, h_f: SpinPolynomial, layout: QubitLayout,
                       cfg: Optional[ConsensusConfig] = None) -> PipelineResult:
    """
    共识流程

    1. 取能量最低的 k 次测量
    2. 每个接触比特按 ⟨σ_z⟩ < 0 取 1，平局取 0
    3. 构造可行几何候选池
    4. 用完整 H_f 给 (几何, 共识接触) 打分
    5. 最优几何的接触换成条件最优（同分时取池中靠前的几何）
    """
    cfg = cfg or ConsensusConfig()
    if samples.total_shots == 0:
        raise ValidationError("样本集为空")
    samples = samples.with_hamiltonian(h_f)
    top = samples.top(cfg.k)

    rows, counts = top.bit_matrix()
    magnetization = counts @ (1 - 2 * rows[:, layout.n_geom:].astype(float)) / top.total_shots
    consensus = "".join("1" if m < 0 else "0" for m in magnetization)
    logger.debug(f"共识接触比特: {consensus}")

    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    pool, from_samples = _geometry_pool(samples, layout, cfg, rng)
    logger.info(f"几何候选池: {len(pool)} 个，其中 {from_samples} 个来自样本")

    scored = []
    for turns in pool:
        bits = encode_geometry(turns) + consensus
        scored.append((h_f.evaluate(bits), bits, turns))
    # 同分取池中靠前者：样本几何按样本能量升序排在随机补齐之前
    best_energy, _best_bits, best_turns = min(scored, key=lambda s: s[0])

    repaired = encode_geometry(best_turns) + repair_contacts(best_turns, h_f, layout)
    final_stage = []
    candidates = []
    for _energy, _bits, turns in scored:
        if tuple(turns) == tuple(best_turns):
            bits = repaired
        else:
            geometric = contacts_from_geometry(turns_to_positions(turns), layout)
            contacts = "".join("1" if a == "1" and b == "1" else "0" for a, b in zip(consensus, geometric))
            bits = encode_geometry(turns) + contacts
        e = h_f.evaluate(bits)
        final_stage.append(e)
        candidates.append((e, bits))
    final_energy, final_bits = min(candidates, key=lambda c: c[0])

    return PipelineResult(
        method="consensus",
        final_bitstring=final_bits,
        final_energy=final_energy,
        stages={
            "raw": list(top.energy_array()),
            "consensus": [s[0] for s in scored],
            "final": final_stage,
        },
        feasibility_fraction=feasibility_fraction(samples, layout),
        polarization=tuple(contact_polarization(samples, layout, cfg.k)),
    )


def greedy_descent(bits: str, h_f: SpinPolynomial, layout: QubitLayout,
                   rng: np.random.Generator) -> Tuple[str, List[float]]:
    """
    首次改进的单比特翻转下降

    翻转顺序为随机排列，每次接受改进后重新打乱；
    只接受保持几何可行的翻转

    Returns:
        (局部极小比特串, 逐步能量轨迹)
    """
    x = list(bits)
    energy = h_f.evaluate_exact(bits)
    trace = [float(energy)]
    improved = True
    while improved:
        improved = False
        for j in rng.permutation(layout.n_q):
            j = int(j)
            delta = h_f.flip_delta(x, j)
            if delta >= 0:
                continue
            candidate = x.copy()
            candidate[j] = "1" if x[j] == "0" else "0"
            if j < layout.n_geom and feasible_geometry("".join(candidate), layout) is None:
                continue
            x, energy = candidate, energy + delta
            trace.append(float(energy))
            improved = True
            break
    return "".join(x), trace


def per_sample_repair(samples: SampleSet, h_f: SpinPolynomial, layout: QubitLayout,
                      seed: int = 0, top_k: Optional[int] = 2000) -> PipelineResult:
    """
    逐样本修复

    对每个几何可行的样本：接触比特取条件最优，做贪心下降，再修复一次接触；
    结果取全部样本中的最优
    """
    if samples.total_shots == 0:
        raise ValidationError("样本集为空")
    samples = samples.with_hamiltonian(h_f)
    repair = _RepairCache(h_f, layout)

    raw, repaired_stage, descended_stage = [], [], []
    best: Optional[Tuple[float, str]] = None
    for idx, (bits, count) in enumerate(samples.counts.items()):
        turns = feasible_geometry(bits, layout)
        if turns is None:
            continue
        repaired = repair(turns)
        rng = np.random.default_rng(np.random.SeedSequence([seed, idx]))
        descended, _trace = greedy_descent(repaired, h_f, layout, rng)
        final_bits = repair(feasible_geometry(descended, layout))

        e_raw = samples.energies[bits]
        e_rep = h_f.evaluate(repaired)
        e_fin = h_f.evaluate(final_bits)
        raw.extend([e_raw] * count)
        repaired_stage.extend([e_rep] * count)
        descended_stage.extend([e_fin] * count)
        if best is None or (e_fin, final_bits) < best:
            best = (e_fin, final_bits)

    if best is None:
        raise EmptyResultError("没有任何几何可行的样本")
    logger.info(f"逐样本修复: {len(raw)} 次可行测量，最优能量 {best[0]:.4f}")

    return PipelineResult(
        method="repair",
        final_bitstring=best[1],
        final_energy=best[0],
        stages={"raw": raw, "contact_repaired": repaired_stage, "descended": descended_stage},
        feasibility_fraction=feasibility_fraction(samples, layout),
        polarization=tuple(contact_polarization(samples, layout, top_k)),
    )
