"""Build script for the optional compiled evaluation kernel.

The package works without the extension (a NumPy fallback is selected at
import time); the compiled kernel just makes off-grid field evaluation much
faster. `optional=True` keeps the install alive if the toolchain is missing.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "eulerlab._kernels._evalc",
                ["src/eulerlab/_kernels/_evalc.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3", "-fopenmp"],
                extra_link_args=["-fopenmp"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
