"""Build script for the optional compiled GF(2) kernels.

The package works without the extension (a pure-Python fallback is
selected at import time); building it just makes the Monte Carlo loops
faster.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "streamdist._kernels._gf2kern",
                ["src/streamdist/_kernels/_gf2kern.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
