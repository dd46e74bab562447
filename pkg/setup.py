import os

from setuptools import setup

ext_modules = []
if os.environ.get("ANYTIME_TAMP_PURE", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "anytime_tamp.geom._ckernels",
                    ["src/anytime_tamp/geom/_ckernels.pyx"],
                    # results must match the Python fallback bit for bit
                    extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
