"""Build script for the optional compiled fast path.

The package works without the extension (a pure-numpy fallback is selected
at import time), so the extension is marked optional: a missing compiler
degrades performance, never correctness.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "cgbandits._fastpath",
                ["src/cgbandits/_fastpath.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
