"""Build the optional Cython kernels.

The package works without them: ``stratnorm.kernels`` falls back to a
pure-Python implementation when the extension cannot be imported.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("STRATNORM_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:  # pragma: no cover
        cythonize = None
    if cythonize is not None:
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("stratnorm._jacobi", ["src/stratnorm/_jacobi.pyx"],
                       extra_compile_args=["-O3", "-fcx-limited-range"])],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
