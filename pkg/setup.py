import os
import shutil

from setuptools import find_packages, setup
from setuptools.command.install import install

CONFIG_TARGET_DIR = "/etc/cdfold"


class InstallConfigFilesCommand(install):
    """自定义安装命令，在安装后配置文件"""

    def run(self):
        install.run(self)
        self.install_config_files()

    def install_config_files(self):
        """安装配置文件到/etc/cdfold/，已存在的用户配置不覆盖"""
        config_source_dir = os.path.join(os.path.dirname(os.path.abspath(__file__)), "config")

        if not os.path.exists(config_source_dir):
            print(f"警告：配置目录不存在: {config_source_dir}")
            return

        try:
            if not os.path.exists(CONFIG_TARGET_DIR):
                print(f"创建配置目录: {CONFIG_TARGET_DIR}")
                os.makedirs(CONFIG_TARGET_DIR, mode=0o755)

            for config_file in sorted(f for f in os.listdir(config_source_dir) if f.endswith('.toml')):
                source_file = os.path.join(config_source_dir, config_file)
                target_file = os.path.join(CONFIG_TARGET_DIR, config_file)
                if os.path.exists(target_file):
                    print(f"配置文件已存在，跳过: {target_file}")
                else:
                    shutil.copy2(source_file, target_file)
                    print(f"安装配置文件: {target_file}")

            print(f"\n配置文件安装完成！")
            print(f"配置目录: {CONFIG_TARGET_DIR}（可用环境变量 CDFOLD_CONFIG_DIR 指向其他目录）")

        except PermissionError:
            print(f"警告：权限不足，无法安装配置文件到 {CONFIG_TARGET_DIR}")
            print(f"请使用 sudo 运行安装命令，或手动复制配置文件：")
            print(f"  sudo mkdir -p {CONFIG_TARGET_DIR}")
            print(f"  sudo cp {config_source_dir}/*.toml {CONFIG_TARGET_DIR}/")
        except OSError as e:
            print(f"警告：安装配置文件失败: {e}")


with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

with open("requirements.txt", "r", encoding="utf-8") as fh:
    install_requires = [line.strip() for line in fh
                        if line.strip() and not line.startswith("#") and not line.startswith("pytest")]

setup(
    name="cdfold",
    version="0.1.0",
    description="四面体格点蛋白折叠的偏置场反绝热量子优化（BF-DCQO）模拟",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests"]),
    py_modules=["cdfold"],
    install_requires=install_requires,
    extras_require={"test": ["pytest>=7.0"]},
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    python_requires=">=3.8",
    entry_points={
        "console_scripts": [
            "cdfold=cdfold:main",
        ],
    },
    cmdclass={
        "install": InstallConfigFilesCommand,
    },
    include_package_data=True,
)
