"""Build script for the optional compiled kernel.

The package works without the extension (a NumPy fallback is selected at
import time); the extension only accelerates the master-equation stepper.
-ffp-contract=off keeps the compiled arithmetic bit-compatible with the
NumPy reference path (no FMA contraction).
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "disordyn._core",
                ["src/disordyn/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
else:
    ext_modules = []

setup(ext_modules=ext_modules)
