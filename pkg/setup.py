"""Build script: compiles the batched detection kernels to a C extension.

Set HNIMSIM_SKIP_NATIVE=1 to install without the compiled kernels; the
package then falls back to the pure-numpy implementations at import time.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("HNIMSIM_SKIP_NATIVE"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/hnimsim/kernels/_native.pyx"],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
