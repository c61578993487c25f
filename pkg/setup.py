"""Build hook: compile the optional Cython fast path for the pairwise sums.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed compile must not fail the install.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "kdeplugin._core._fastsums",
                ["src/kdeplugin/_core/_fastsums.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - depends on toolchain
    print(f"kdeplugin: skipping Cython extension build ({exc}); "
          "the NumPy fallback will be used")

setup(ext_modules=ext_modules)
