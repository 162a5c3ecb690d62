"""
analyze 命令
把 report.json 导出为直方图 CSV 和汇总 JSON
"""

import os
from typing import Any, Dict

from ..errors import ValidationError
from ..experiment import REPORT, ExperimentReport, analyze_report, read_json
from .base import BaseModule


class AnalyzeModule(BaseModule):
    """导出分析数据"""

    def get_description(self) -> str:
        return "导出作图用的能量直方图与汇总统计"

    def get_actions(self) -> Dict[str, str]:
        return {
            "report": "读取运行目录或 report.json 并导出",
        }

    def _handle_report(self, path: str, params: Dict[str, str]) -> int:
        """
        Args:
            path: 运行目录或 report.json 路径
            params: dir（输出目录，缺省为报告所在目录下的 analysis/）
        """
        report_path = os.path.join(path, REPORT) if os.path.isdir(path) else path
        if not os.path.isfile(report_path):
            raise ValidationError(f"找不到报告文件: {report_path}，请先运行 postprocess")
        report = ExperimentReport.from_dict(read_json(report_path))

        default_dir = os.path.join(os.path.dirname(os.path.abspath(report_path)), "analysis")
        out_dir = self._get_param_value("dir", "report", params, default_dir)
        result: Dict[str, Any] = analyze_report(report, out_dir)
        return self._output_toml(result)
