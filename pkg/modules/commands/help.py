"""
帮助命令
"""

from typing import Dict

from .base import EXIT_VALIDATION, BaseModule


class HelpModule(BaseModule):
    """帮助命令"""

    def __init__(self, module_map: Dict[str, BaseModule]):
        super().__init__()
        self.module_map = module_map

    def get_description(self) -> str:
        """获取命令描述"""
        return "显示帮助信息"

    def get_actions(self) -> Dict[str, str]:
        """获取命令支持的操作及其描述"""
        return {
            "modules": "列出所有可用命令",
            "module": "显示特定命令的帮助信息",
            "action": "显示特定操作的帮助信息",
            "examples": "显示使用示例"
        }

    def _handle_modules(self, value: str, params: Dict[str, str]) -> int:
        """列出所有可用命令"""
        return self._output_toml({
            "modules": [{"name": name, "description": module.get_description()}
                        for name, module in self.module_map.items()]
        })

    def _handle_module(self, module_name: str, params: Dict[str, str]) -> int:
        """
        显示特定命令的帮助信息

        Args:
            module_name: 命令名称
            params: 参数字典

        Returns:
            执行结果状态码
        """
        if module_name not in self.module_map:
            return self._output_error(f"未知命令: {module_name}", EXIT_VALIDATION)

        module = self.module_map[module_name]
        return self._output_toml({
            "module": module_name,
            "description": module.get_description(),
            "actions": [{"action": a, "description": d} for a, d in module.get_actions().items()],
        })

    def _handle_action(self, action_path: str, params: Dict[str, str]) -> int:
        """
        显示特定操作的帮助信息

        Args:
            action_path: 操作路径，格式为 "command.action"
        """
        if "." not in action_path:
            return self._output_error("操作路径格式错误，应为 'command.action'", EXIT_VALIDATION)

        module_name, action_name = action_path.split(".", 1)
        if module_name not in self.module_map:
            return self._output_error(f"未知命令: {module_name}", EXIT_VALIDATION)

        module = self.module_map[module_name]
        actions = module.get_actions()
        if action_name not in actions:
            return self._output_error(f"未知操作: {action_name}", EXIT_VALIDATION)

        # 命令自带的详细帮助优先
        help_method = getattr(module, f"_help_{action_name}", None)
        if help_method:
            return self._output_toml(help_method())

        return self._output_toml({
            "module": module_name,
            "action": action_name,
            "description": actions[action_name],
            "usage": f"cdfold {module_name} {action_name}:<value> [parameter:value] [...]"
        })

    def _handle_examples(self, value: str, params: Dict[str, str]) -> int:
        """显示使用示例"""
        examples = [
            ("cdfold help", "列出所有可用命令"),
            ("cdfold build seq:IDWKKLLDAAKQIL", "构建哈密顿量并报告量子比特布局"),
            ("cdfold build seq:HPPPPHH cd:true", "同时统计两种剪枝预设下的反绝热项数"),
            ("cdfold run seq:HPPPPHH rounds:10 shots:5000 seed:1 dir:runs/demo", "运行 BF-DCQO 与随机基线"),
            ("cdfold run seq:HPPPPHH prune:high", "使用高剪枝预设"),
            ("cdfold baseline seq:HPPPPHH shots:50000", "只生成均匀随机基线"),
            ("cdfold postprocess all:runs/demo", "对运行目录执行两条后处理流程"),
            ("cdfold analyze report:runs/demo dir:runs/demo/analysis", "导出直方图 CSV 与汇总"),
            ("cdfold refsolve exact:HPPPPHH", "穷举求参考能量"),
            ("cdfold refsolve ga:IDWKKLLDAAKQIL seed:3", "遗传算法求参考能量"),
        ]
        return self._output_toml({"examples": [{"command": c, "description": d} for c, d in examples]})
