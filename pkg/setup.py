"""Build script: compiles the event-loop kernel to a C extension when Cython
and a C compiler are available.  The same source file runs interpreted if the
extension is absent, so a failed build degrades to the pure-Python kernel."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("RCSTREAM_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/rcstream/_kernel.py"],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": False,
            },
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
