from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "phaseflow._core",
                ["src/phaseflow/_core.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # No Cython: install with the pure-python kernels only.
    ext_modules = []

setup(ext_modules=ext_modules)
