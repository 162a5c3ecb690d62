"""
postprocess 命令
对运行目录中保存的样本执行共识流程与逐样本修复流程
"""

import os
from typing import Any, Dict

from ..errors import ValidationError
from ..experiment import MANIFEST, postprocess_run, read_json
from ..postproc import ConsensusConfig
from .base import BaseModule


class PostprocessModule(BaseModule):
    """样本后处理"""

    def get_description(self) -> str:
        return "对运行目录执行共识流程和逐样本修复流程"

    def get_actions(self) -> Dict[str, str]:
        return {
            "consensus": "只执行共识流程",
            "repair": "只执行逐样本修复流程",
            "all": "两条流程都执行",
        }

    def _consensus_config(self, action: str, run_dir: str, params: Dict[str, str]) -> ConsensusConfig:
        """命令行或配置中给出 k / pool / seed 时覆盖运行清单中的共识参数"""
        manifest_path = os.path.join(run_dir, MANIFEST)
        if not os.path.isfile(manifest_path):
            raise ValidationError(f"运行目录缺少 {MANIFEST}: {run_dir}")
        manifest = read_json(manifest_path)
        stored = manifest.get("consensus", {})
        seed = self._get_int("seed", action, params, int(manifest["config"]["seed"]))
        return ConsensusConfig(
            k=self._get_int("k", action, params, int(stored.get("k", 2000))),
            pool_size=self._get_int("pool", action, params, int(stored.get("pool_size", 200))),
            max_attempts=int(stored.get("max_attempts", 10 ** 6)),
            max_stale=int(stored.get("max_stale", 10_000)),
            seed=seed,
        )

    def _postprocess(self, action: str, run_dir: str, params: Dict[str, str]) -> int:
        consensus = self._consensus_config(action, run_dir, params)
        report = postprocess_run(run_dir, action, consensus, consensus.seed)

        data: Dict[str, Any] = {
            "dir": os.path.abspath(run_dir),
            "summary": report.summary(),
        }
        if report.warnings:
            data["warnings"] = report.warnings
        return self._output_toml(data)

    def _handle_consensus(self, run_dir: str, params: Dict[str, str]) -> int:
        return self._postprocess("consensus", run_dir, params)

    def _handle_repair(self, run_dir: str, params: Dict[str, str]) -> int:
        return self._postprocess("repair", run_dir, params)

    def _handle_all(self, run_dir: str, params: Dict[str, str]) -> int:
        """
        执行两条流程

        Args:
            run_dir: 运行目录
            params: k, pool, seed
        """
        return self._postprocess("all", run_dir, params)
