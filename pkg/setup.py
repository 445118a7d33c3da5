"""Builds the optional compiled enumeration kernel; the package works without it."""

import os

from setuptools import Extension, setup


def extensions():
    if os.environ.get("BRA_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension("bra.scid._kernel", ["src/bra/scid/_kernel.pyx"], extra_compile_args=["-O3"])
    return cythonize([ext], language_level=3, quiet=True)


setup(ext_modules=extensions())
