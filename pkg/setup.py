from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# -ffp-contract=off keeps the compiled kernel rounding bit-identical to the
# pure-python fallback (no fused multiply-add)
ext = Extension(
    "ascentopt._core",
    ["src/ascentopt/_core.pyx"],
    extra_compile_args=["-O3", "-ffp-contract=off"],
)

setup(ext_modules=cythonize([ext], language_level=3) if cythonize else [])
