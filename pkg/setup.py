"""Build script. The compiled pairwise kernels are optional: if Cython or a
C compiler is unavailable the package installs with the pure-numpy fallback."""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "unrectify._kernels._pairwise_cy",
                ["src/unrectify/_kernels/_pairwise_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
