"""Build script for the compiled convolution kernel.

The extension is optional at runtime: radioae._kernels falls back to the
NumPy implementation when the compiled module is absent.
"""

import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

ext = Extension(
    "radioae._kernels._convext",
    ["src/radioae/_kernels/_convext.pyx"],
    include_dirs=[numpy.get_include()],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    extra_compile_args=["-O3"],
)

setup(ext_modules=cythonize([ext], language_level=3))
