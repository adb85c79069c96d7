import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; kernels fall back to NumPy
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("TRACERBEC_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "tracerbec._ckernels",
                ["src/tracerbec/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-fcx-limited-range"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
