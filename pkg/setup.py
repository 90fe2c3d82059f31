"""Build script for the optional compiled forest kernel.

The package is fully functional without the extension: metael._kernels
falls back to the NumPy implementation when the compiled module is
missing (see metael/_kernels/__init__.py).
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "metael._kernels._forest_cy",
                ["src/metael/_kernels/_forest_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
