"""Builds the optional compiled kernels; the package falls back to numpy without them."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("CLUSTERCUT_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools.extension import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "clustercut._kernels",
                    ["src/clustercut/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": 3},
        )

setup(ext_modules=ext_modules)
