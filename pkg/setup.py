"""Build script for the optional compiled kernel extension.

The pure-Python package works without the extension; set EONPLAN_SKIP_EXT=1
to force a pure build on platforms without a C toolchain.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("EONPLAN_SKIP_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        ext_modules = []
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "eonplan._kernels._core",
                    ["src/eonplan/_kernels/_core.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )

setup(ext_modules=ext_modules)
