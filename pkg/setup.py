"""Builds the optional compiled token scanner.

The extension is a pure speedup; when Cython or a C compiler is missing the
package installs without it and lmcanvas._scan falls back to the Python
implementation.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "lmcanvas._speedups",
                ["src/lmcanvas/_speedups.pyx"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
