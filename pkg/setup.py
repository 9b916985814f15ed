"""Build hook for the optional compiled jet kernel.

The package is pure Python by default; when Cython and a C compiler are
available, the hot Cauchy-product kernel is compiled and picked up at
import.  Absence of either leaves the pure fallback in place.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/atomcur/_jetcore.pyx"],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
