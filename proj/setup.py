import os

from pybind11.setup_helpers import ParallelCompile, Pybind11Extension, build_ext
from setuptools import setup

ParallelCompile("HREDQS_BUILD_JOBS", default=4).install()

vendor = "vendor" if os.path.exists("vendor/CLI11.hpp") else "/opt/vendor"

core = Pybind11Extension(
    "hredqs._core",
    sources=[
        "python/bindings.cpp",
        "src/numerics.cpp",
        "src/corpus.cpp",
        "src/model.cpp",
        "src/training.cpp",
        "src/decoding.cpp",
        "src/baselines.cpp",
        "src/eval.cpp",
        "src/cli.cpp",
    ],
    include_dirs=["include", vendor],
    cxx_std=20,
)

setup(ext_modules=[core], cmdclass={"build_ext": build_ext})
