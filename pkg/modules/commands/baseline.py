"""
baseline 命令
只生成均匀随机比特串作为对照
"""

import os
from typing import Any, Dict

import numpy as np

from ..experiment import HAMILTONIAN, atomic_write_text, load_matrix
from ..hamiltonian import build_total
from ..lattice_model import Peptide, qubit_layout
from ..postproc import contact_polarization, feasibility_fraction, polarization_strength, random_baseline
from .base import BaseModule
from .build import penalties_from_params


class BaselineModule(BaseModule):
    """均匀随机基线"""

    def get_description(self) -> str:
        return "生成均匀随机比特串基线"

    def get_actions(self) -> Dict[str, str]:
        return {
            "seq": "对残基序列生成随机样本并统计能量",
        }

    def _handle_seq(self, sequence: str, params: Dict[str, str]) -> int:
        peptide = Peptide.from_string(sequence)
        matrix = load_matrix(self._get_param_value("matrix", "seq", params))
        h_f = build_total(peptide, matrix, penalties_from_params(self, "seq", params, matrix))
        layout = qubit_layout(peptide)

        shots = self._get_int("shots", "seq", params, 50000)
        seed = self._get_int("seed", "seq", params, 0)
        out_dir = self._get_param_value("dir", "seq", params, os.path.join("runs", f"{peptide}-random-s{seed}"))

        samples = random_baseline(shots, layout.n_q, np.random.SeedSequence([seed, 0]), hamiltonian=h_f)
        os.makedirs(out_dir, exist_ok=True)
        atomic_write_text(os.path.join(out_dir, HAMILTONIAN), h_f.to_json() + "\n")
        samples.to_csv(os.path.join(out_dir, "random.csv"))

        energies = samples.energy_array()
        data: Dict[str, Any] = {
            "dir": os.path.abspath(out_dir),
            "sequence": str(peptide),
            "shots": shots,
            "mean_energy": float(energies.mean()) if len(energies) else None,
            "min_energy": float(energies.min()) if len(energies) else None,
            "feasibility_fraction": feasibility_fraction(samples, layout),
            "polarization": polarization_strength(contact_polarization(samples, layout)),
        }
        return self._output_toml(data)
