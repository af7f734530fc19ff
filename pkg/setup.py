"""Build script: compiles the optional tape-evaluation extension.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile only prints a warning instead of aborting
the install.  Set COSYMRED_NO_EXT=1 to skip the compile attempt entirely.
"""

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: skipping compiled extension ({exc})")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: skipping {ext.name} ({exc})")


ext_modules = []
if not os.environ.get("COSYMRED_NO_EXT"):
    try:
        from Cython.Build import cythonize
        from setuptools.extension import Extension

        ext_modules = cythonize(
            [Extension("cosymred._speedups", ["src/cosymred/_speedups.pyx"])],
            language_level="3",
        )
    except ImportError:
        print("warning: Cython not available, building pure-python package")

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
