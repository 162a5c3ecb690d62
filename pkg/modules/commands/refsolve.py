"""
refsolve 命令
求结构能参考值：小规模穷举，大规模遗传算法
"""

import logging
import os
from typing import Any, Dict

from ..experiment import REFERENCE, atomic_write_text, load_matrix
from ..lattice_model import Peptide
from ..refsolve import DEFAULT_MAX_N, GAConfig, RefResult, exact_enumerate, genetic_algorithm
from .base import BaseModule

logger = logging.getLogger(__name__)


class RefsolveModule(BaseModule):
    """经典参考求解"""

    def get_description(self) -> str:
        return "求参考能量 E_ref（穷举或遗传算法）"

    def get_actions(self) -> Dict[str, str]:
        return {
            "exact": "深度优先穷举所有自回避行走",
            "ga": "在转向标签串上运行遗传算法",
        }

    def _save(self, action: str, result: RefResult, params: Dict[str, str]) -> Dict[str, Any]:
        text = result.to_json() + "\n"
        written = []
        save = self._get_param_value("save", action, params)
        if save:
            atomic_write_text(save, text)
            written.append(os.path.abspath(save))
        run_dir = self._get_param_value("dir", action, params)
        if run_dir:
            path = os.path.join(run_dir, REFERENCE)
            atomic_write_text(path, text)
            written.append(os.path.abspath(path))
        data = result.to_dict()
        if written:
            data["files"] = written
        return data

    def _handle_exact(self, sequence: str, params: Dict[str, str]) -> int:
        peptide = Peptide.from_string(sequence)
        matrix = load_matrix(self._get_param_value("matrix", "exact", params))
        max_n = self._get_int("max_n", "exact", params, DEFAULT_MAX_N)
        result = exact_enumerate(peptide, matrix, max_n)
        return self._output_toml(self._save("exact", result, params))

    def _handle_ga(self, sequence: str, params: Dict[str, str]) -> int:
        """
        遗传算法

        Args:
            sequence: 残基序列
            params: population, generations, tournament, crossover, mutation, patience, seed, save, dir
        """
        peptide = Peptide.from_string(sequence)
        matrix = load_matrix(self._get_param_value("matrix", "ga", params))
        cfg = GAConfig(
            population=self._get_int("population", "ga", params, 200),
            generations=self._get_int("generations", "ga", params, 5000),
            tournament=self._get_int("tournament", "ga", params, 3),
            crossover_rate=self._get_float("crossover", "ga", params, 0.9),
            mutation_rate=self._get_float("mutation", "ga", params, None),
            patience=self._get_int("patience", "ga", params, 200),
            seed=self._get_int("seed", "ga", params, 0),
        )
        result = genetic_algorithm(peptide, matrix, cfg)
        logger.info(f"遗传算法: {peptide}, {result.generations} 代, E_ref = {result.e_ref}")
        return self._output_toml(self._save("ga", result, params))

    def _help_ga(self) -> Dict[str, Any]:
        return {
            "module": "refsolve",
            "action": "ga",
            "usage": "cdfold refsolve ga:<SEQUENCE> [population:200] [generations:5000] [tournament:3] "
                     "[crossover:0.9] [mutation:<1/(N-1)>] [patience:200] [seed:0] [save:<path>] [dir:<run_dir>]",
            "description": "dir 给出时写入 <dir>/reference.json，供 postprocess 读取",
        }
