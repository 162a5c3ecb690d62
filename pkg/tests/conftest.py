"""测试共用夹具"""

import numpy as np
import pytest

from modules.hamiltonian import build_total
from modules.lattice_model import STANDARD_RESIDUES, InteractionMatrix, Peptide, qubit_layout


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """命令模块不读取 /etc/cdfold，也不受 $CDFOLD_MATRIX 影响"""
    config_dir = tmp_path / "etc-cdfold"
    config_dir.mkdir()
    monkeypatch.setenv("CDFOLD_CONFIG_DIR", str(config_dir))
    monkeypatch.delenv("CDFOLD_MATRIX", raising=False)
    return config_dir


@pytest.fixture
def matrix_file(tmp_path):
    """把 20x20 数组写成矩阵文件，返回文件路径"""
    def write(name, eps):
        path = tmp_path / name
        rows = [" ".join(repr(float(v)) for v in row) for row in np.asarray(eps)]
        path.write_text(" ".join(STANDARD_RESIDUES) + "\n" + "\n".join(rows) + "\n", encoding="utf-8")
        return path
    return write


@pytest.fixture
def hp():
    return InteractionMatrix.hp()


@pytest.fixture
def hp7(hp):
    """N=7：9 个量子比特（7 个几何 + 2 个接触）"""
    peptide = Peptide.from_string("HPPPPHH")
    return peptide, qubit_layout(peptide), build_total(peptide, hp)


@pytest.fixture
def hp6(hp):
    peptide = Peptide.from_string("HPPPPH")
    return peptide, qubit_layout(peptide), build_total(peptide, hp)
