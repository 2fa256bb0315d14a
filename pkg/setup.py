import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

# The compiled kernel lane must not use fused multiply-adds: the pure-Python
# fallback and generated solvers are required to match it bitwise, and FMA
# contraction changes rounding.
extra = ["-O2", "-ffp-contract=off"]

setup(
    ext_modules=cythonize(
        [
            Extension(
                "coneforge.sparse._ckern",
                ["src/coneforge/sparse/_ckern.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=extra,
            )
        ],
        language_level=3,
    )
)
