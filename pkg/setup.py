"""Build script for the optional compiled coordinate-descent kernel.

The package works without the extension: taplasso._kernels falls back to
the pure-numpy kernel when the compiled module cannot be imported.
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
                "taplasso._cd_fast",
                ["src/taplasso/_cd_fast.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level="3",
    )

setup(ext_modules=ext_modules)
