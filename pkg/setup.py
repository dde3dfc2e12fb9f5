"""Build script for the optional compiled hash-kernel extension.

The package is fully functional without the extension: ecuchain._kernels
falls back to the pure-Python implementation when the compiled module is
missing, so a failed native build degrades performance, not behaviour.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if we can; warn and continue if we cannot."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler or linker missing
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"WARNING: native kernel build failed ({exc}); "
            "falling back to pure-Python kernels",
            file=sys.stderr,
        )


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("WARNING: Cython not available; skipping native kernels", file=sys.stderr)
        return []
    ext = Extension(
        "ecuchain._kernels._native",
        sources=["src/ecuchain/_kernels/_native.pyx"],
        libraries=["crypto"],
    )
    return cythonize([ext], language_level=3)


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
