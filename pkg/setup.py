from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "council_weights._gibbs",
        ["src/council_weights/_gibbs.pyx"],
        extra_compile_args=["-O2", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
