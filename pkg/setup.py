import os

from setuptools import setup

# The compiled kernels are an optimisation, not a requirement: the package
# falls back to the pure-Python kernels when the extension is absent.
# Set FINITEKEY_PURE=1 to skip the extension build entirely.
ext_modules = []
if not os.environ.get("FINITEKEY_PURE"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "finitekey._ckernels",
                    ["src/finitekey/_ckernels.pyx"],
                    # -ffp-contract=off keeps the compiled kernels bit-compatible
                    # with the pure-Python ones (no FMA contraction).
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            language_level="3",
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
