"""Build script for the optional compiled Bessel kernel.

The package works without it (a NumPy fallback is selected at import time),
so a missing Cython or compiler only skips the extension.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "vortexstab._bessel_core",
                ["src/vortexstab/_bessel_core.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:  # pragma: no cover - build without Cython
    ext_modules = []

setup(ext_modules=ext_modules)
