import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# The compiled kernel must reproduce the pure-Python fallback bit for bit:
# no fast-math, no FMA contraction, and no fusing sin/cos into sincos (glibc's
# sincos is not always identical to separate sin and cos calls).
extensions = [
    Extension(
        "microswarm._kernels",
        ["src/microswarm/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off", "-fno-builtin-sin", "-fno-builtin-cos"],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
