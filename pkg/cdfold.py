#!/usr/bin/env python3
"""
cdfold - 四面体格点蛋白折叠的反绝热量子优化模拟
"""

import logging
import sys
from typing import Dict, List, Tuple

from modules.commands import analyze, baseline, build, help, postprocess, refsolve, run
from modules.commands.base import EXIT_VALIDATION

# 命令映射表
MODULE_MAP = {
    'build': build.BuildModule,
    'run': run.RunModule,
    'baseline': baseline.BaselineModule,
    'postprocess': postprocess.PostprocessModule,
    'analyze': analyze.AnalyzeModule,
    'refsolve': refsolve.RefsolveModule,
}


class Cdfold:
    def __init__(self):
        self.modules = {}
        self.help_module = None
        self._load_modules()

    def _load_modules(self):
        """加载所有命令"""
        for name, module_class in MODULE_MAP.items():
            self.modules[name] = module_class()
        self.help_module = help.HelpModule(self.modules)

    def execute(self, args: List[str]) -> int:
        """
        执行 cdfold 命令

        Args:
            args: 命令行参数列表

        Returns:
            退出码：0 成功，1 运行失败，2 输入校验失败
        """
        output_format, verbose, args = self._parse_globals(args)
        logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                            format="%(asctime)s %(levelname)s %(name)s: %(message)s")

        if not args:
            self._show_help()
            return EXIT_VALIDATION

        if args[0] == "help" or args[0].endswith(":help"):
            return self._handle_help(args[0], args[1:])

        module_name = args[0]
        if module_name not in self.modules:
            print(f"错误：未知命令 '{module_name}'")
            self._show_modules()
            return EXIT_VALIDATION

        module = self.modules[module_name]
        module.output_format = output_format

        if len(args) < 2:
            print(f"错误：命令 '{module_name}' 缺少操作参数")
            module.show_help()
            return EXIT_VALIDATION

        try:
            action, value = self._parse_action(args[1])
            params = self._parse_params(args[2:], module, action)
        except ValueError as e:
            print(f"错误：{e}")
            return EXIT_VALIDATION
        return module.execute(action, value, params)

    def _parse_globals(self, args: List[str]) -> Tuple[str, bool, List[str]]:
        output_format = "toml"
        verbose = False
        rest = []
        i = 0
        while i < len(args):
            if args[i] == "--output" and i + 1 < len(args):
                output_format = args[i + 1]
                i += 2
            elif args[i] in ("--verbose", "-v"):
                verbose = True
                i += 1
            else:
                rest.append(args[i])
                i += 1
        return output_format, verbose, rest

    def _parse_action(self, action_str: str) -> Tuple[str, str]:
        """
        解析操作字符串

        Args:
            action_str: 格式为 "action:value"
        """
        if ':' not in action_str:
            raise ValueError("操作参数格式错误，应为 'action:value'")

        action, value = action_str.split(':', 1)
        if not action or not value:
            raise ValueError("操作和值不能为空")
        return action, value

    def _parse_params(self, param_list: List[str], module, action: str) -> Dict[str, str]:
        """
        解析参数列表

        Args:
            param_list: 每个元素为 "param:value"，布尔参数可以只写 "param"
            module: 命令对象，用于获取布尔参数列表
            action: 操作名称
        """
        boolean_params = module.get_boolean_params(action).get(action, [])

        params = {}
        for param in param_list:
            if ':' not in param:
                if param in boolean_params:
                    params[param] = "true"
                else:
                    raise ValueError(f"参数格式错误: '{param}'，应为 'param:value' (布尔参数可以省略值，默认为true)")
            else:
                key, value = param.split(':', 1)
                if not key:
                    raise ValueError(f"参数名不能为空: '{param}'")
                params[key] = value
        return params

    def _show_help(self):
        """显示帮助信息"""
        print("cdfold - 格点蛋白折叠的 BF-DCQO 模拟")
        print("用法: cdfold [--output FORMAT] [--verbose] <command> <action>:<value> [parameter:value] [...]")
        print("")
        print("选项:")
        print("  --output FORMAT  输出格式，可以是 toml（默认）或 raw")
        print("  --verbose        输出调试日志")
        print("")
        print("可用命令:")
        self._show_modules()

    def _show_modules(self):
        for name in self.modules:
            print(f"  {name} - {self.modules[name].get_description()}")

    def _handle_help(self, help_cmd: str, args: List[str]) -> int:
        """
        处理 "help [command]"、"help examples" 与 "command:help"
        """
        self.help_module.output_format = "toml"

        if help_cmd == "help":
            if not args:
                return self.help_module.execute("modules", "all", {})
            if args[0] == "examples":
                return self.help_module.execute("examples", "all", {})
            if args[0].startswith("action:"):
                return self.help_module.execute("action", args[0][len("action:"):], {})
            if "." in args[0]:
                return self.help_module.execute("action", args[0], {})
            return self.help_module.execute("module", args[0], {})

        module_name = help_cmd[:-len(":help")]
        return self.help_module.execute("module", module_name, {})


def main() -> int:
    """主函数"""
    return Cdfold().execute(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
