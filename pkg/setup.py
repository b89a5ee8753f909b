import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# no -ffast-math and no FMA contraction: the compiled kernels must give the
# same doubles as the Python fallback; -fno-builtin stops sin+cos being
# fused into sincos(), which rounds differently in rare cases
flags = ["-O3", "-ffp-contract=off", "-fno-fast-math", "-fno-builtin"]
if os.environ.get("KCOV_DEBUG_BUILD"):
    flags = ["-O0", "-g"]

extensions = [
    Extension(
        "kcov._kernels",
        ["src/kcov/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=flags,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        language_level=3,
        compiler_directives={"boundscheck": False, "wraparound": False, "cdivision": True},
    )
)
