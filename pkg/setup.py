"""Build script for the optional compiled kernel extension.

The package works without the extension (a pure-Python fallback is
selected at import time); building it just makes the hot loops faster.
"""
from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "ddspec._kernels_c",
                ["src/ddspec/_kernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
