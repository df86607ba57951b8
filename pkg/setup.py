import numpy
from setuptools import Extension, setup

# The compiled kernels are optional: the package falls back to a pure
# numpy/scipy implementation when the extension is absent.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "prandtl_lab._kernels",
                ["src/prandtl_lab/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
