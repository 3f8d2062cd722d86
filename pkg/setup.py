"""Build script for the compiled kernel extension.

The package works without the extension (a pure-numpy fallback is selected
at import time), but the compiled kernels are considerably faster for large
frame streams.  -ffp-contract=off keeps the C arithmetic free of fused
multiply-adds so both backends produce bit-identical frames.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "iccdcal._kernels",
        ["src/iccdcal/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
