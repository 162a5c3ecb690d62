"""
TOML格式输出模块
"""

import datetime
import logging
import math
import os
from typing import Any, Dict

import numpy as np
import toml

logger = logging.getLogger(__name__)


def _plain(value: Any) -> Any:
    """转换为 TOML 可序列化的普通类型，丢弃 None"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items() if v is not None}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value if v is not None]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


class TomlOutputMixin:
    """TOML输出混入类，为命令添加TOML格式输出功能"""

    def _output_toml(self, data: Dict[str, Any]) -> int:
        """
        以TOML格式输出数据；output_format 为 raw 时输出 key = value 行

        Args:
            data: 要输出的数据字典

        Returns:
            状态码，0表示成功
        """
        if not isinstance(data, dict):
            logger.error("输出数据必须是字典类型")
            return 1

        if getattr(self, "output_format", "toml") == "raw":
            return self._emit(self._raw_lines(_plain(data)))

        output_data = {
            "module": self.name,
            "status": "success",
            "data": _plain(data)
        }
        return self._emit(toml.dumps(output_data))

    def _output_error(self, message: str, code: int = 1) -> int:
        """
        以TOML格式输出错误信息

        Args:
            message: 错误消息
            code: 错误码

        Returns:
            错误码
        """
        if getattr(self, "output_format", "toml") == "raw":
            print(f"错误：{message}")
            return code

        error_data = {
            "module": self.name,
            "status": "error",
            "error": {
                "message": message,
                "code": code
            }
        }
        self._emit(toml.dumps(error_data))
        return code

    def _raw_lines(self, data: Dict[str, Any], prefix: str = "") -> str:
        lines = []
        for key, value in data.items():
            name = f"{prefix}{key}"
            if isinstance(value, dict):
                lines.append(self._raw_lines(value, prefix=f"{name}."))
            else:
                lines.append(f"{name} = {value}")
        return "\n".join(line for line in lines if line)

    def _emit(self, text: str) -> int:
        # 设置了输出文件则写文件，否则打印到控制台
        if getattr(self, 'output_file', None):
            return self._write_to_file(text)
        print(text)
        return 0

    def _set_output_file(self, output_file: str):
        """
        设置输出文件路径

        Args:
            output_file: 输出文件路径
        """
        dir_path = os.path.dirname(output_file)
        if dir_path and not os.path.exists(dir_path):
            os.makedirs(dir_path, exist_ok=True)

        self.output_file = output_file

    def _write_to_file(self, content: str) -> int:
        """
        将内容写入输出文件

        Args:
            content: 要写入的内容
        """
        try:
            with open(self.output_file, 'w', encoding='utf-8') as f:
                f.write(content)
            print(f"输出已保存到: {self.output_file}")
            return 0
        except OSError as e:
            logger.error(f"写入文件失败: {e}")
            print(f"错误：无法写入文件 {self.output_file}: {e}")
            return 1

    def _get_timestamp(self) -> str:
        """
        获取当前时间戳

        Returns:
            格式化的时间字符串
        """
        return datetime.datetime.now().strftime("%Y%m%d%H%M%S")
