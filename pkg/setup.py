import os

from setuptools import setup

ext_modules = []
if not os.environ.get("MODELSMITH_NO_EXT"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("modelsmith._dpll_ext", ["src/modelsmith/_dpll_ext.pyx"], language="c++",
                       extra_compile_args=["-O2"])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
