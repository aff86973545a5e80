"""Build script: compiles the hot-loop kernels (tree growing, SHAP walks).

The package works without the extension -- `triad.learner._backend` falls
back to the NumPy implementation when the compiled module is absent.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("TRIAD_SKIP_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/triad/learner/_kernels.pyx"],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": False,  # IEEE division semantics must match Python
            },
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
