"""Build script: compiles the optional Cython scheduling kernel.

The package is fully functional without the extension (a pure-Python
backend is selected at import time), so a failed or skipped build is
not fatal.
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
                "evload._kernel._schedule_cy",
                ["src/evload/_kernel/_schedule_cy.pyx"],
            )
        ],
        language_level="3",
    )

setup(ext_modules=ext_modules)
