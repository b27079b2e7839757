"""Build script.

Compiles the optional Cython kernel extension (sedpost._kernels). The
package works without it: sedpost.kernels falls back to the pure-Python
implementation at import time. Set SEDPOST_NO_EXT=1 to skip compilation.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("SEDPOST_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            "src/sedpost/_kernels.pyx",
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        print("Cython not available, building without the compiled kernels")

setup(ext_modules=ext_modules)
