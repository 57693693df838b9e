import os

import numpy as np
from setuptools import Extension, setup

# QRSR_NO_EXT=1 skips the compiled core; the package then runs on the
# pure-Python kernels.
ext_modules = []
if not os.environ.get("QRSR_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "qrsr._ckernels",
                    ["src/qrsr/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
