"""Build script: compiles the optional Cython jackknife core.

The package is fully functional without the extension (a pure-Python core is
selected at import time), so a failed compile downgrades to a warning instead
of aborting the install.
"""

import warnings

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    extensions = cythonize(
        [
            Extension(
                "ustat_bee._jackknife_cy",
                ["src/ustat_bee/_jackknife_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    warnings.warn(f"building without the compiled core: {exc}")
    extensions = []

setup(ext_modules=extensions)
