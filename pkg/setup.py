"""Build script: compiles the optional DPLL model-counting kernel.

The package works without the compiled extension (a pure-Python solver is
selected at import time), so the extension is marked optional.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext = Extension(
        "beliefplan._kernel",
        ["src/beliefplan/_kernel.pyx"],
        extra_compile_args=["-O3"],
        optional=True,
    )
    ext_modules = cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
        },
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
