import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("ACCW_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("accw._kernels", ["src/accw/_kernels.pyx"])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # pure-Python fallback is selected at import time
        ext_modules = []

setup(ext_modules=ext_modules)
