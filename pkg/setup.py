"""Build script: compiles the Cython hot-loop kernels when possible.

The compiled module is optional; if Cython or a C compiler is missing the
package installs anyway and falls back to the NumPy kernel backend at
import time (see evfuse._kernels).
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "evfuse._kernels._native",
                ["src/evfuse/_kernels/_native.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # ffp-contract=off keeps vote_rays bit-identical to the
                # NumPy backend (no FMA contraction)
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level="3",
    )
    for ext in ext_modules:
        ext.optional = True
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
