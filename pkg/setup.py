"""Build script: compiles the MLP kernel extension when Cython and a C
compiler are available.  The package works without it (numpy fallback is
selected at import time), so a failed extension build is not fatal.
"""
import sys
import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

# The kernels are written with unit-stride inner loops; -O3 lets the
# compiler vectorize them.  MSVC uses different spellings, so only pass
# the flags where they are understood.
EXTRA_COMPILE_ARGS = [] if sys.platform == "win32" else ["-O3", "-funroll-loops"]


class optional_build_ext(build_ext):
    """build_ext that degrades to the pure backend instead of failing."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            warnings.warn(f"compiled kernels unavailable ({exc}); "
                          "trajsynth will use the numpy fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"skipping {ext.name}: {exc}")


try:
    from Cython.Build import cythonize
    ext_modules = cythonize(
        [Extension("trajsynth.kernels._mlpcore",
                   ["src/trajsynth/kernels/_mlpcore.pyx"],
                   extra_compile_args=EXTRA_COMPILE_ARGS)],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
