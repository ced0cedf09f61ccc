from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

setup(
    ext_modules=[
        Pybind11Extension("fluxflow_binding._engine", ["src/engine.cpp"], cxx_std=17),
    ],
    cmdclass={"build_ext": build_ext},
)
