"""Builds the lieflow_py extension by delegating to cargo.

The crate is compiled in release mode and the resulting cdylib is copied
to wherever setuptools expects the extension artifact, which also covers
editable installs.
"""

import shutil
import subprocess
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

ROOT = Path(__file__).resolve().parent


class CargoExtension(Extension):
    def __init__(self, module_name: str, crate_name: str):
        super().__init__(module_name, sources=[])
        self.crate_name = crate_name


class CargoBuildExt(build_ext):
    def build_extension(self, ext: CargoExtension) -> None:
        subprocess.run(
            ["cargo", "build", "--release", "-p", ext.crate_name],
            cwd=ROOT,
            check=True,
        )
        release = ROOT / "target" / "release"
        candidates = [
            release / f"lib{ext.name}.so",
            release / f"lib{ext.name}.dylib",
            release / f"{ext.name}.dll",
        ]
        built = next((p for p in candidates if p.exists()), None)
        if built is None:
            raise FileNotFoundError(f"cargo produced no cdylib for {ext.name} in {release}")
        dest = Path(self.get_ext_fullpath(ext.name))
        dest.parent.mkdir(parents=True, exist_ok=True)
        shutil.copy2(built, dest)


setup(
    ext_modules=[CargoExtension("lieflow_py", "lieflow-py")],
    cmdclass={"build_ext": CargoBuildExt},
)
