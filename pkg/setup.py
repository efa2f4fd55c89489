"""Build script: compiles the optional Gaussian-density kernel extension.

The extension is a speedup only; if no compiler (or Cython) is available the
install proceeds and the package falls back to the NumPy implementation.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """build_ext that degrades to a pure-Python install on compile failure."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing entirely
            warnings.warn(f"C extension build failed ({exc}); "
                          "falling back to the pure NumPy kernels.")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"building {ext.name} failed ({exc}); "
                          "falling back to the pure NumPy kernels.")


def make_ext_modules():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        warnings.warn(f"Cython/NumPy unavailable ({exc}); "
                      "skipping the compiled kernels.")
        return []
    ext = Extension(
        "smm.kernels._gauss",
        sources=["src/smm/kernels/_gauss.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level="3")


setup(
    ext_modules=make_ext_modules(),
    cmdclass={"build_ext": OptionalBuildExt},
)
