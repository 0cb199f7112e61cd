"""Build the optional Cython sampler kernel.

The package works without it; ``qbmrl.sampler`` falls back to the numpy
implementation when the extension is missing.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "qbmrl._sqa_kernel",
                ["src/qbmrl/_sqa_kernel.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=ext_modules)
