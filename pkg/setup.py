"""Build script. Compiles the optional Cython kernel when a toolchain is present.

The package is fully functional without the extension: specprune.kernels
falls back to the numpy implementation at import time.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "specprune._kernels",
                ["src/specprune/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # no cython / no compiler: pure-python install
    print(f"specprune: skipping compiled kernel ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
