"""
实验编排与持久化
运行目录的写入与读取、报告拼装、分析数据导出以及多种子重复实验
"""

import csv
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import bfdcqo
from .bfdcqo import RunConfig
from .errors import EmptyResultError, SimulationCapError, ValidationError
from .hamiltonian import PenaltyConfig, SpinPolynomial, build_total, load_hamiltonian
from .lattice_model import InteractionMatrix, Peptide, QubitLayout, qubit_layout
from .postproc import (ConsensusConfig, PipelineResult, consensus_pipeline, contact_polarization,
                       feasibility_fraction, per_sample_repair, polarization_strength, random_baseline)
from .qsim import SampleSet
from .refsolve import DEFAULT_MAX_N, RefResult, exact_enumerate

logger = logging.getLogger(__name__)

MATRIX_ENV = "CDFOLD_MATRIX"
BUNDLED_MATRIX = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data", "hp.txt")

ARMS = ("quantum", "random")
PIPELINES = ("consensus", "repair")

MANIFEST = "manifest.json"
HAMILTONIAN = "hamiltonian.json"
REPORT = "report.json"
REFERENCE = "reference.json"
SUMMARY = "summary.json"


def atomic_write_text(path: str, text: str):
    """先写同目录临时文件再 os.replace，读者不会看到半个文件"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, data: Any):
    atomic_write_text(path, json.dumps(data, sort_keys=True, indent=2) + "\n")


def read_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except OSError as e:
        raise ValidationError(f"无法读取文件 {path}: {e}")
    except json.JSONDecodeError as e:
        raise ValidationError(f"文件 {path} 不是合法 JSON: {e}")


def resolve_matrix_path(path: Optional[str] = None) -> Optional[str]:
    """命令行 > $CDFOLD_MATRIX > 仓库自带 data/hp.txt"""
    if path:
        return path
    env = os.environ.get(MATRIX_ENV)
    if env:
        return env
    return BUNDLED_MATRIX if os.path.exists(BUNDLED_MATRIX) else None


def load_matrix(path: Optional[str] = None) -> InteractionMatrix:
    resolved = resolve_matrix_path(path)
    if resolved is None:
        logger.debug("未找到矩阵文件，使用内置 HP 矩阵")
        return InteractionMatrix.hp()
    return InteractionMatrix.load(resolved)


@dataclass(frozen=True)
class ExperimentConfig:
    """一次完整实验的输入"""

    peptide: str
    output_dir: str
    matrix_path: Optional[str] = None
    penalties: Optional[PenaltyConfig] = None
    run: RunConfig = field(default_factory=RunConfig)
    consensus: ConsensusConfig = field(default_factory=ConsensusConfig)
    baseline: bool = True

    def __post_init__(self):
        Peptide.from_string(self.peptide)
        if self.matrix_path and not os.path.isfile(self.matrix_path):
            raise ValidationError(f"矩阵文件不存在: {self.matrix_path}")


def _samples_file(round_index: int) -> str:
    return f"round_{round_index:02d}.csv"


def execute_run(cfg: ExperimentConfig) -> Dict[str, Any]:
    """
    运行 BF-DCQO（以及可选的等样本量随机基线）并写出运行目录

    Returns:
        运行清单
    """
    peptide = Peptide.from_string(cfg.peptide)
    matrix_path = resolve_matrix_path(cfg.matrix_path)
    matrix = load_matrix(matrix_path)
    penalties = cfg.penalties or PenaltyConfig.default_for(matrix)
    layout = qubit_layout(peptide)
    if layout.n_q > cfg.run.cap:
        raise SimulationCapError(f"{layout.n_q} 个量子比特超出态矢量模拟上限 {cfg.run.cap}，属于硬件规模实例，拒绝模拟")

    h_f = build_total(peptide, matrix, penalties)
    os.makedirs(cfg.output_dir, exist_ok=True)
    atomic_write_text(os.path.join(cfg.output_dir, HAMILTONIAN), h_f.to_json() + "\n")

    records = bfdcqo.run(h_f, cfg.run)
    rounds = []
    for rec in records:
        name = _samples_file(rec.index)
        rec.samples.to_csv(os.path.join(cfg.output_dir, name))
        rounds.append({
            "index": rec.index,
            "bias": list(rec.bias.h),
            "best_energy": rec.best_energy,
            "mean_energy": rec.mean_energy,
            "surviving_terms": rec.surviving_terms,
            "gate_estimate": rec.gate_estimate,
            "samples": name,
        })

    baseline_file = None
    if cfg.baseline:
        total = cfg.run.rounds * cfg.run.n_shots
        rand = random_baseline(total, layout.n_q, np.random.SeedSequence([cfg.run.seed, 0]), hamiltonian=h_f)
        baseline_file = "random.csv"
        rand.to_csv(os.path.join(cfg.output_dir, baseline_file))

    manifest = {
        "sequence": str(peptide),
        "matrix": matrix.name,
        "matrix_path": os.path.abspath(matrix_path) if matrix_path else None,
        "matrix_eps": matrix.eps.tolist(),
        "penalties": penalties.to_dict(),
        "layout": {"n_q": layout.n_q, "n_geom": layout.n_geom, "n_contact": layout.n_contact},
        "config": cfg.run.to_dict(),
        "consensus": cfg.consensus.to_dict(),
        "rounds": rounds,
        "baseline": baseline_file,
        "hamiltonian": HAMILTONIAN,
    }
    write_json(os.path.join(cfg.output_dir, MANIFEST), manifest)
    logger.info(f"运行目录已写出: {cfg.output_dir}")
    return manifest


@dataclass
class RunArtifacts:
    """从运行目录读回的内容"""

    run_dir: str
    manifest: Dict[str, Any]
    hamiltonian: SpinPolynomial
    peptide: Peptide
    layout: QubitLayout
    quantum: SampleSet
    random: Optional[SampleSet]


def load_run(run_dir: str) -> RunArtifacts:
    manifest_path = os.path.join(run_dir, MANIFEST)
    if not os.path.isfile(manifest_path):
        raise ValidationError(f"运行目录缺少 {MANIFEST}: {run_dir}")
    manifest = read_json(manifest_path)
    h_f = load_hamiltonian(os.path.join(run_dir, manifest.get("hamiltonian", HAMILTONIAN)))
    peptide = Peptide.from_string(manifest["sequence"])
    layout = qubit_layout(peptide)
    if layout.n_q != h_f.n_q:
        raise ValidationError(f"哈密顿量 n_q={h_f.n_q} 与肽链布局 n_q={layout.n_q} 不符")

    rounds = manifest.get("rounds", [])
    if not rounds:
        raise ValidationError("运行清单中没有任何轮次")
    quantum = None
    for entry in rounds:
        s = SampleSet.from_csv(os.path.join(run_dir, entry["samples"]), hamiltonian=h_f)
        quantum = s if quantum is None else quantum.merge(s)

    random = None
    if manifest.get("baseline"):
        random = SampleSet.from_csv(os.path.join(run_dir, manifest["baseline"]), hamiltonian=h_f)
    return RunArtifacts(run_dir, manifest, h_f, peptide, layout, quantum, random)


@dataclass
class ExperimentReport:
    """
    各组（quantum / random）× 各流程（consensus / repair）的结果
    以及原始样本统计与参考能量
    """

    sequence: str
    e_ref: Optional[float] = None
    pipelines: Dict[str, Dict[str, PipelineResult]] = field(default_factory=dict)
    raw: Dict[str, List[List[float]]] = field(default_factory=dict)
    feasibility: Dict[str, float] = field(default_factory=dict)
    polarization: Dict[str, List[float]] = field(default_factory=dict)
    gate_estimates: List[int] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def raw_mean(self, arm: str) -> Optional[float]:
        hist = self.raw.get(arm)
        if not hist:
            return None
        total = sum(c for _, c in hist)
        return float(sum(e * c for e, c in hist) / total)

    def summary(self) -> Dict[str, Any]:
        """与参考表格列一一对应的汇总值"""
        out: Dict[str, Any] = {"sequence": self.sequence, "E_ref": self.e_ref}
        for pipeline in PIPELINES:
            for arm, tag in (("quantum", "Q"), ("random", "R")):
                res = self.pipelines.get(arm, {}).get(pipeline)
                out[f"{pipeline}.E_avg_{tag}"] = res.e_avg if res else None
                out[f"{pipeline}.E_best_{tag}"] = res.e_best if res else None
        mean_q, mean_r = self.raw_mean("quantum"), self.raw_mean("random")
        out["raw_mean_quantum"] = mean_q
        out["raw_mean_random"] = mean_r
        out["raw_mean_ratio"] = mean_r / mean_q if mean_q not in (None, 0) and mean_r is not None else None
        for arm in ARMS:
            out[f"feasibility_{arm}"] = self.feasibility.get(arm)
            values = self.polarization.get(arm)
            out[f"polarization_{arm}"] = polarization_strength(values) if values is not None else None
        out["gate_estimates"] = list(self.gate_estimates)
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sequence": self.sequence,
            "E_ref": self.e_ref,
            "pipelines": {arm: {p: r.to_dict() for p, r in by.items()} for arm, by in self.pipelines.items()},
            "raw": self.raw,
            "feasibility": self.feasibility,
            "polarization": self.polarization,
            "gate_estimates": self.gate_estimates,
            "warnings": self.warnings,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentReport":
        return cls(
            sequence=data.get("sequence", ""),
            e_ref=data.get("E_ref"),
            pipelines={arm: {p: PipelineResult.from_dict(r) for p, r in by.items()}
                       for arm, by in data.get("pipelines", {}).items()},
            raw={arm: [[float(e), int(c)] for e, c in hist] for arm, hist in data.get("raw", {}).items()},
            feasibility={k: float(v) for k, v in data.get("feasibility", {}).items()},
            polarization={k: [float(x) for x in v] for k, v in data.get("polarization", {}).items()},
            gate_estimates=[int(g) for g in data.get("gate_estimates", [])],
            warnings=list(data.get("warnings", [])),
        )


def _raw_histogram(samples: SampleSet) -> List[List[float]]:
    hist: Dict[float, int] = {}
    for b, c in samples.counts.items():
        e = samples.energies[b]
        hist[e] = hist.get(e, 0) + c
    return [[e, c] for e, c in sorted(hist.items())]


def manifest_matrix(manifest: Dict[str, Any]) -> InteractionMatrix:
    """运行清单里记录的接触能矩阵；旧清单没有矩阵内容时按名称还原"""
    name = manifest.get("matrix", "hp")
    eps = manifest.get("matrix_eps")
    if eps is not None:
        return InteractionMatrix(np.array(eps, dtype=float), name=name)
    if name == "hp":
        return InteractionMatrix.hp()
    return InteractionMatrix.load(manifest.get("matrix_path") or name)


def reference_energy(run_dir: str, peptide: Peptide, matrix: InteractionMatrix) -> Optional[float]:
    """优先读取运行目录中的 reference.json，否则在可穷举规模下现算"""
    path = os.path.join(run_dir, REFERENCE)
    if os.path.isfile(path):
        return RefResult.from_dict(read_json(path)).e_ref
    if peptide.n <= DEFAULT_MAX_N:
        return exact_enumerate(peptide, matrix).e_ref
    return None


def postprocess_run(run_dir: str, pipeline: str = "all", consensus: Optional[ConsensusConfig] = None,
                    seed: Optional[int] = None) -> ExperimentReport:
    """
    对运行目录中保存的样本执行后处理，结果并入 report.json

    Args:
        run_dir: 运行目录
        pipeline: consensus / repair / all
        consensus: 共识流程参数，缺省时取运行清单中的值
        seed: 后处理随机种子，缺省时取运行种子
    """
    if pipeline not in PIPELINES + ("all",):
        raise ValidationError(f"未知后处理流程: {pipeline}")
    art = load_run(run_dir)
    seed = int(art.manifest["config"]["seed"]) if seed is None else seed
    if consensus is None:
        consensus = replace(ConsensusConfig(**art.manifest.get("consensus", {})), seed=seed)

    report_path = os.path.join(run_dir, REPORT)
    if os.path.isfile(report_path):
        report = ExperimentReport.from_dict(read_json(report_path))
    else:
        report = ExperimentReport(sequence=str(art.peptide))
    report.e_ref = reference_energy(run_dir, art.peptide, manifest_matrix(art.manifest))
    report.gate_estimates = [int(r["gate_estimate"]) for r in art.manifest["rounds"]]

    arms = {"quantum": art.quantum}
    if art.random is not None:
        arms["random"] = art.random
    chosen = PIPELINES if pipeline == "all" else (pipeline,)

    for arm, samples in arms.items():
        report.raw[arm] = _raw_histogram(samples)
        report.feasibility[arm] = feasibility_fraction(samples, art.layout)
        report.polarization[arm] = [float(v) for v in contact_polarization(samples, art.layout, consensus.k)]
        by_arm = report.pipelines.setdefault(arm, {})
        for name in chosen:
            result = _run_pipeline(name, samples, art, consensus, seed, report)
            if result is not None:
                by_arm[name] = result

    write_json(report_path, report.to_dict())
    return report


def _run_pipeline(name: str, samples: SampleSet, art: RunArtifacts, consensus: ConsensusConfig, seed: int,
                  report: ExperimentReport) -> Optional[PipelineResult]:
    if name == "consensus":
        return consensus_pipeline(samples, art.hamiltonian, art.layout, consensus)
    try:
        return per_sample_repair(samples, art.hamiltonian, art.layout, seed=seed, top_k=consensus.k)
    except EmptyResultError as e:
        message = f"逐样本修复没有可用样本: {e}"
        logger.warning(message)
        report.warnings.append(message)
        return None


def _write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence[Any]]):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)
    os.replace(tmp, path)


def analyze_report(report: ExperimentReport, out_dir: str) -> Dict[str, Any]:
    """
    导出作图所需的数据序列

    每组一个直方图 CSV（stage, energy, count），阶段包括原始样本与两条流程的各阶段；
    另写 summary.json（均值、最优、E_ref、比值、可行比例、极化）
    """
    files = []
    for arm in ARMS:
        rows = [("raw", repr(float(e)), int(c)) for e, c in report.raw.get(arm, [])]
        for pipeline in PIPELINES:
            res = report.pipelines.get(arm, {}).get(pipeline)
            if res is None:
                continue
            rows.extend((f"{pipeline}.{stage}", repr(e), c) for stage, e, c in res.stage_rows())
        path = os.path.join(out_dir, f"histogram_{arm}.csv")
        _write_csv(path, ("stage", "energy", "count"), rows)
        files.append(path)

    summary = report.summary()
    write_json(os.path.join(out_dir, SUMMARY), summary)
    return {"files": files + [os.path.join(out_dir, SUMMARY)], "summary": summary}


@dataclass(frozen=True)
class ReplicateOutcome:
    """单个种子的两组 × 两流程结果"""

    seed: int
    e_ref: float
    raw_mean: Dict[str, float]
    polarization: Dict[str, float]
    consensus: Dict[str, PipelineResult]
    repair: Dict[str, Optional[PipelineResult]]
    first_round_mean: float
    last_round_mean: float


def replicate(sequence: str, seeds: Sequence[int], run: RunConfig, consensus: Optional[ConsensusConfig] = None,
              matrix: Optional[InteractionMatrix] = None) -> List[ReplicateOutcome]:
    """在内存中对一组种子重复完整实验（不写文件）"""
    peptide = Peptide.from_string(sequence)
    matrix = matrix or InteractionMatrix.hp()
    layout = qubit_layout(peptide)
    h_f = build_total(peptide, matrix)
    e_ref = exact_enumerate(peptide, matrix).e_ref
    consensus = consensus or ConsensusConfig()

    outcomes = []
    for seed in seeds:
        run_cfg = replace(run, seed=seed)
        records = bfdcqo.run(h_f, run_cfg)
        arms = {
            "quantum": bfdcqo.all_samples(records),
            "random": random_baseline(run_cfg.rounds * run_cfg.n_shots, layout.n_q,
                                      np.random.SeedSequence([seed, 0]), hamiltonian=h_f),
        }
        cons_cfg = replace(consensus, seed=seed)
        cons, rep, means, pol = {}, {}, {}, {}
        for arm, samples in arms.items():
            means[arm] = samples.mean_energy()
            pol[arm] = polarization_strength(contact_polarization(samples, layout, cons_cfg.k))
            cons[arm] = consensus_pipeline(samples, h_f, layout, cons_cfg)
            try:
                rep[arm] = per_sample_repair(samples, h_f, layout, seed=seed, top_k=cons_cfg.k)
            except EmptyResultError:
                rep[arm] = None
        outcomes.append(ReplicateOutcome(seed, e_ref, means, pol, cons, rep,
                                         records[0].mean_energy, records[-1].mean_energy))
        logger.info(f"种子 {seed}: 量子组原始均值 {means['quantum']:.4f}，随机组 {means['random']:.4f}")
    return outcomes
