"""Build script for the optional compiled kernel core.

The package works without the extension (a numpy fallback is selected at
import time), so the build is marked optional: a missing compiler or
Cython only costs speed, never functionality.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    extensions = [
        Extension(
            "plrank._core",
            ["src/plrank/_core.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            optional=True,
        )
    ]
    ext_modules = cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

# Name, version and layout mirror pyproject.toml so that legacy
# setuptools (too old to read [project] metadata) still resolves the
# src layout instead of copying the extension to a bogus path.
setup(
    name="plrank",
    version="0.1.0",
    package_dir={"": "src"},
    packages=["plrank", "plrank.kernels"],
    ext_modules=ext_modules,
)
