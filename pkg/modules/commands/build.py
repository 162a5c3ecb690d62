"""
build 命令
构建问题哈密顿量，写出 JSON 并报告量子比特布局
"""

import logging
import os
from typing import Any, Dict, List, Optional

from ..experiment import atomic_write_text, load_matrix
from ..hamiltonian import PenaltyConfig, build_total
from ..lattice_model import InteractionMatrix, Peptide, qubit_layout
from ..pauli_engine import count_terms
from .base import BaseModule

logger = logging.getLogger(__name__)


def penalties_from_params(module: BaseModule, action: str, params: Dict[str, str],
                          matrix: InteractionMatrix) -> PenaltyConfig:
    """命令行或配置中未给出的惩罚系数取 10·max|ε|"""
    default = PenaltyConfig.default_for(matrix)
    return PenaltyConfig(
        lambda_back=module._get_float("lambda_back", action, params, default.lambda_back),
        lambda_mismatch=module._get_float("lambda_mismatch", action, params, default.lambda_mismatch),
        lambda_overlap=module._get_float("lambda_overlap", action, params, default.lambda_overlap),
    )


class BuildModule(BaseModule):
    """构建哈密顿量"""

    def get_description(self) -> str:
        return "构建四面体格点哈密顿量并报告量子比特布局"

    def get_actions(self) -> Dict[str, str]:
        return {
            "seq": "按残基序列构建 H_f = H_back + H_contact",
        }

    def get_boolean_params(self, action: str = None) -> Dict[str, List[str]]:
        return {"seq": ["cd"]}

    def _handle_seq(self, sequence: str, params: Dict[str, str]) -> int:
        """
        构建哈密顿量

        Args:
            sequence: 残基序列
            params: matrix, file, lambda_back, lambda_mismatch, lambda_overlap, cd
        """
        peptide = Peptide.from_string(sequence)
        matrix_path: Optional[str] = self._get_param_value("matrix", "seq", params)
        matrix = load_matrix(matrix_path)
        penalties = penalties_from_params(self, "seq", params, matrix)
        layout = qubit_layout(peptide)

        h_f = build_total(peptide, matrix, penalties)
        path = self._get_param_value("file", "seq", params, f"{peptide}.hamiltonian.json")
        atomic_write_text(path, h_f.to_json() + "\n")

        bp = h_f.to_binary_polynomial()
        data: Dict[str, Any] = {
            "sequence": str(peptide),
            "matrix": matrix.name,
            "file": os.path.abspath(path),
            "layout": {"n_q": layout.n_q, "n_geom": layout.n_geom, "n_contact": layout.n_contact},
            "terms": len(h_f),
            "degree": h_f.degree,
            "degree_histogram": {str(k): v for k, v in h_f.degree_histogram().items()},
            "penalties": penalties.to_dict(),
            "binary_polynomial": {"terms": len(bp), "degree": bp.degree},
        }

        if self._get_bool("cd", "seq", params, False):
            presets = {"high": self._get_prune("seq", {"prune": "high"}),
                       "low": self._get_prune("seq", {"prune": "low"})}
            counts = count_terms(h_f, list(presets.values()) + [0.0])
            data["cd_terms"] = {name: counts[theta] for name, theta in presets.items()}
            data["cd_terms"]["total"] = counts[0.0]

        logger.info(f"build: {peptide} -> {path}")
        return self._output_toml(data)

    def _help_seq(self) -> Dict[str, Any]:
        return {
            "module": "build",
            "action": "seq",
            "usage": "cdfold build seq:<SEQUENCE> [matrix:<path>] [file:<path>] [lambda_back:<x>] "
                     "[lambda_mismatch:<x>] [lambda_overlap:<x>] [cd]",
            "description": "写出哈密顿量 JSON，并打印 n_q / n_geom / n_contact、项数与阶数分布",
        }
