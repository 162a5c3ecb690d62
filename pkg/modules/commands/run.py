"""
run 命令
执行 BF-DCQO（可选等样本量随机基线），写出运行目录
"""

import logging
import os
from typing import Any, Dict, List

from ..bfdcqo import RunConfig
from ..experiment import ExperimentConfig, execute_run, load_matrix, resolve_matrix_path
from ..postproc import ConsensusConfig
from ..qsim import MAX_QUBITS
from .base import BaseModule
from .build import penalties_from_params

logger = logging.getLogger(__name__)


def run_config_from_params(module: BaseModule, action: str, params: Dict[str, str]) -> RunConfig:
    """缺省值与硬件实验一致：R=10, n_shots=5000, T=1, n_steps=1, K_s=2, n_l=100"""
    return RunConfig(
        rounds=module._get_int("rounds", action, params, 10),
        n_shots=module._get_int("shots", action, params, 5000),
        n_elite=module._get_int("elite", action, params, 100),
        k_s=module._get_float("ks", action, params, 2.0),
        total_time=module._get_float("time", action, params, 1.0),
        n_steps=module._get_int("steps", action, params, 1),
        theta_prune=module._get_prune(action, params),
        seed=module._get_int("seed", action, params, 0),
        cap=module._get_int("cap", action, params, MAX_QUBITS),
    )


def consensus_config_from_params(module: BaseModule, action: str, params: Dict[str, str],
                                 seed: int) -> ConsensusConfig:
    return ConsensusConfig(
        k=module._get_int("k", action, params, 2000),
        pool_size=module._get_int("pool", action, params, 200),
        seed=seed,
    )


class RunModule(BaseModule):
    """运行 BF-DCQO"""

    def get_description(self) -> str:
        return "运行偏置场反馈 DCQO 与随机基线并保存全部样本"

    def get_actions(self) -> Dict[str, str]:
        return {
            "seq": "对残基序列运行完整实验",
        }

    def get_boolean_params(self, action: str = None) -> Dict[str, List[str]]:
        return {"seq": ["baseline"]}

    def _handle_seq(self, sequence: str, params: Dict[str, str]) -> int:
        """
        运行实验

        Args:
            sequence: 残基序列
            params: dir, matrix, rounds, shots, elite, ks, time, steps, prune, seed, cap,
                    baseline, k, pool, lambda_*
        """
        run_cfg = run_config_from_params(self, "seq", params)
        matrix_path = resolve_matrix_path(self._get_param_value("matrix", "seq", params))
        matrix = load_matrix(matrix_path)
        out_dir = self._get_param_value("dir", "seq", params,
                                        os.path.join("runs", f"{sequence.upper()}-s{run_cfg.seed}"))
        cfg = ExperimentConfig(
            peptide=sequence,
            output_dir=out_dir,
            matrix_path=matrix_path,
            penalties=penalties_from_params(self, "seq", params, matrix),
            run=run_cfg,
            consensus=consensus_config_from_params(self, "seq", params, run_cfg.seed),
            baseline=self._get_bool("baseline", "seq", params, True),
        )

        manifest = execute_run(cfg)
        rounds = manifest["rounds"]
        data: Dict[str, Any] = {
            "dir": os.path.abspath(out_dir),
            "sequence": manifest["sequence"],
            "layout": manifest["layout"],
            "config": manifest["config"],
            "rounds": [{"index": r["index"], "mean_energy": r["mean_energy"], "best_energy": r["best_energy"],
                        "surviving_terms": r["surviving_terms"], "gate_estimate": r["gate_estimate"]}
                       for r in rounds],
            "best_energy": rounds[-1]["best_energy"],
            "baseline": manifest["baseline"] or "",
        }
        return self._output_toml(data)

    def _help_seq(self) -> Dict[str, Any]:
        return {
            "module": "run",
            "action": "seq",
            "usage": "cdfold run seq:<SEQUENCE> [dir:<path>] [rounds:10] [shots:5000] [elite:100] [ks:2] "
                     "[time:1] [steps:1] [prune:low|high|<θ>] [seed:0] [baseline:true] [k:2000] [pool:200]",
            "description": "量子比特数超过模拟上限时拒绝运行；同一种子两次运行得到逐字节相同的清单",
        }
