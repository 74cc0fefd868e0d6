"""Builds the optional compiled kernel extension.

The package works without it: ``expricer._kernels`` falls back to the
numpy implementations when the compiled module is missing.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-python install
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext = Extension(
        "expricer._kernels._core",
        ["src/expricer/_kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # -ffp-contract=off keeps per-path arithmetic identical to the
        # numpy backend (no FMA contraction), so the two backends agree
        # to the last ulp and regression values do not depend on which
        # one is loaded.
        extra_compile_args=["-O2", "-ffp-contract=off"],
    )
    ext.optional = True
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
