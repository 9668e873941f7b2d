import os

from setuptools import Extension, setup

ext_modules = []
# native tuning lets the compiler vectorize the 64-bit modular row updates;
# set COLLIDENET_PORTABLE=1 when building a binary for other machines
flags = ["-O3"]
if os.environ.get("COLLIDENET_PORTABLE", "") != "1":
    flags.append("-march=native")
if os.environ.get("COLLIDENET_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "collidenet._kernels",
                    ["src/collidenet/_kernels.pyx"],
                    extra_compile_args=flags,
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
