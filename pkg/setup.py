"""Build script for the optional compiled kernels.

The package works without the extension: `lexguide._kernels` falls back to
the pure-Python implementations when `_native` is missing, so a failed
compile downgrades performance, not functionality.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the Cython kernels if possible; warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - toolchain dependent
            warnings.warn(f"skipping compiled kernels ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover - toolchain dependent
            warnings.warn(f"skipping {ext.name} ({exc}); using pure-Python fallback")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:  # pragma: no cover
        warnings.warn("Cython not available; building without compiled kernels")
        return []
    return cythonize(
        [Extension("lexguide._kernels._native", ["src/lexguide/_kernels/_native.pyx"])],
        language_level="3",
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
