import os

from setuptools import Extension, setup

extensions = []
if not os.environ.get("DIVLATE_SKIP_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize

        extensions = cythonize(
            [
                Extension(
                    "divlate._ckernels",
                    ["src/divlate/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    # ffp-contract=off: no FMA contraction, keeps results
                    # bit-identical to the numpy fallback
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # no cython toolchain: install the pure-python kernels only
        extensions = []

setup(ext_modules=extensions)
