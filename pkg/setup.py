"""Build script: compiles the optional geometry extension.

The package works without the extension (a pure-Python fallback is
selected at import time), so compilation failures only cost speed.
Set FPVG_SKIP_EXT=1 to skip the extension build entirely.
"""

import os

from setuptools import Extension, setup


def extension_modules():
    if os.environ.get("FPVG_SKIP_EXT") == "1":
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "fpvg._geometry_fast",
        ["src/fpvg/_geometry_fast.pyx"],
        # -ffp-contract=off keeps the compiled arithmetic bit-identical to
        # the pure-Python fallback (no fused multiply-add contraction).
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"}, quiet=True)


setup(ext_modules=extension_modules())
