"""
cdfold 命令基础类
所有子命令都应继承此类
"""

import logging
import math
import os
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, List, Optional

import toml

from ..errors import CdfoldError, ValidationError
from .toml_output import TomlOutputMixin

logger = logging.getLogger(__name__)

CONFIG_ENV = "CDFOLD_CONFIG_DIR"
DEFAULT_CONFIG_DIR = "/etc/cdfold"

# 退出码：0 成功，1 运行失败，2 输入校验失败
EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2


def config_dir() -> str:
    return os.environ.get(CONFIG_ENV, DEFAULT_CONFIG_DIR)


class BaseModule(ABC, TomlOutputMixin):
    """cdfold 子命令基类"""

    def __init__(self):
        self.name = self.__class__.__name__.lower().replace('module', '')
        self.output_format = "toml"  # 默认输出格式为TOML
        self.output_file = None  # 输出文件路径
        self.config = {}  # 命令配置
        self._load_config()  # 加载配置文件

    @abstractmethod
    def get_description(self) -> str:
        """获取命令描述"""
        pass

    @abstractmethod
    def get_actions(self) -> Dict[str, str]:
        """获取命令支持的操作及其描述"""
        pass

    def get_boolean_params(self, action: str = None) -> Dict[str, List[str]]:
        """
        获取布尔参数列表

        Returns:
            布尔参数字典，格式为 {action: [param1, param2, ...]}
        """
        return {}

    def execute(self, action: str, value: str, params: Dict[str, str]) -> int:
        """
        执行命令操作

        Args:
            action: 操作名称
            value: 操作值
            params: 参数字典

        Returns:
            退出码
        """
        if "out" in params:
            out_param = params["out"]
            if not out_param:
                return self._output_error("out参数不能为空", EXIT_VALIDATION)
            if out_param.endswith(".toml"):
                output_file = out_param
            else:
                output_file = os.path.join(out_param, f"cdfold-{self._get_timestamp()}.toml")
            self._set_output_file(output_file)

        if action not in self.get_actions():
            print(f"错误：未知操作 '{action}'")
            self.show_help()
            return EXIT_VALIDATION

        method = getattr(self, f"_handle_{action}", None)
        if method is None:
            return self._output_error(f"操作 '{action}' 尚未实现", EXIT_RUNTIME)

        try:
            return method(value, params)
        except ValidationError as e:
            logger.debug(f"{self.name}.{action} 校验失败: {e}")
            return self._output_error(str(e), EXIT_VALIDATION)
        except (CdfoldError, OSError) as e:
            logger.error(f"{self.name}.{action} 执行失败: {e}")
            return self._output_error(str(e), EXIT_RUNTIME)

    def show_help(self):
        """显示命令帮助信息"""
        print(f"{self.name} 命令 - {self.get_description()}")
        print("")
        print("支持的操作:")
        for action, desc in self.get_actions().items():
            print(f"  {action} - {desc}")

    def _load_config(self):
        """
        加载命令配置文件
        从 $CDFOLD_CONFIG_DIR/{命令名}.toml 加载，默认目录 /etc/cdfold
        """
        config_path = os.path.join(config_dir(), f"{self.name}.toml")
        self.config = {}

        try:
            if os.path.exists(config_path):
                with open(config_path, 'r', encoding='utf-8') as f:
                    self.config = toml.load(f)
                logger.debug(f"已加载配置文件: {config_path}")
            else:
                logger.debug(f"配置文件不存在: {config_path}，使用代码默认值")
        except PermissionError:
            logger.warning(f"无法读取配置文件 {config_path} (权限拒绝)，使用代码默认值")
        except toml.TomlDecodeError as e:
            logger.warning(f"配置文件格式错误 {config_path}: {e}，使用代码默认值")

    def _get_param_value(self, key: str, action: str = None,
                         params: Dict[str, str] = None, fallback: Any = None) -> Any:
        """
        获取参数值，实现三层优先级
        优先级: 命令行参数 > 操作级配置 > 全局配置 > 代码默认值
        """
        # 第一优先级：命令行参数
        if params and key in params:
            return params[key]

        # 第二优先级：操作级配置
        if action:
            action_config = self.config.get('default', {}).get(action, {})
            if key in action_config:
                return action_config[key]

        # 第三优先级：全局配置
        global_config = self.config.get('default', {})
        if key in global_config and not isinstance(global_config[key], dict):
            return global_config[key]

        # 第四优先级：代码默认值
        return fallback

    def _typed_param(self, key: str, action: str, params: Dict[str, str], fallback: Any,
                     convert: Callable[[Any], Any], kind: str) -> Any:
        value = self._get_param_value(key, action, params, fallback)
        if value is None:
            return None
        try:
            return convert(value)
        except (TypeError, ValueError):
            raise ValidationError(f"参数 {key} 应为{kind}: '{value}'")

    def _get_int(self, key: str, action: str, params: Dict[str, str], fallback: Optional[int]) -> Optional[int]:
        return self._typed_param(key, action, params, fallback, int, "整数")

    def _get_float(self, key: str, action: str, params: Dict[str, str],
                   fallback: Optional[float]) -> Optional[float]:
        return self._typed_param(key, action, params, fallback, float, "实数")

    def _get_bool(self, key: str, action: str, params: Dict[str, str], fallback: bool) -> bool:
        """布尔参数，命令行上空值视为 true"""
        if params and key in params and params[key] == "":
            return True
        return self._convert_bool(self._get_param_value(key, action, params, fallback), fallback)

    def _get_prune(self, action: str, params: Dict[str, str], fallback: str = "low") -> float:
        """
        剪枝阈值：high / low 取 [prune] 表中的预设，也可直接给出实数或 inf
        """
        presets = {"high": 1.0, "low": 0.01}
        presets.update({k: float(v) for k, v in self.config.get("prune", {}).items()})
        value = self._get_param_value("prune", action, params, fallback)
        if isinstance(value, str) and value.lower() in presets:
            return presets[value.lower()]
        try:
            theta = float(value)
        except (TypeError, ValueError):
            raise ValidationError(f"prune 应为 high、low 或非负实数: '{value}'")
        if math.isnan(theta) or theta < 0:
            raise ValidationError(f"prune 不能为负: {theta}")
        return theta

    def _convert_bool(self, value: Any, default: bool = False) -> bool:
        """
        转换布尔值

        Args:
            value: 要转换的值
            default: 默认值

        Returns:
            布尔值
        """
        if isinstance(value, bool):
            return value
        if isinstance(value, str):
            return value.lower() in ("true", "yes", "1", "on")
        if isinstance(value, (int, float)):
            return bool(value)
        return default
