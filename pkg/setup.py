"""Optional Cython build of the series kernels; the package works without it."""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("FUNDSOL_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("fundsol._kernels", ["src/fundsol/_kernels.pyx"],
                       include_dirs=[numpy.get_include()], extra_compile_args=["-O3"])],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
