"""Build script for the optional native kernels.

The package works without the extension (a numpy/pure-Python fallback is
selected at import time); building it just makes resizing and the JPEG
entropy coder fast. `pip install -e . --no-build-isolation` compiles it
when Cython and a C compiler are available.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "hqc.kernels._native",
                ["src/hqc/kernels/_native.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
