"""Build script: compiles the optional Cython kernel extension.

The package is fully functional without the extension (a NumPy fallback is
selected at import time); building it just makes the hot loops fast.  If the
Cython toolchain is unavailable the install proceeds in pure mode.
"""

import sys
import warnings

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "qes_sextic._kernels",
                ["src/qes_sextic/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": "3",
        },
    )
except Exception as exc:  # pragma: no cover - degraded build path
    warnings.warn(
        f"Cython kernel build skipped ({exc!r}); installing with the pure-Python backend",
        stacklevel=1,
    )
    print("qes-sextic: building without compiled kernels", file=sys.stderr)

setup(ext_modules=ext_modules)
