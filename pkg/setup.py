"""Build script.

The simulation hot loop has an optional Cython implementation
(``tswind.kernels._compiled``).  If Cython or a C compiler is missing the
build silently falls back to the pure-Python loop; the package is fully
functional either way.  ``-ffp-contract=off`` keeps the compiled arithmetic
bit-compatible with the interpreted reference loop.
"""

from setuptools import setup
from setuptools.command.build_ext import build_ext


def _extensions():
    try:
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    return cythonize(
        [
            Extension(
                "tswind.kernels._compiled",
                ["src/tswind/kernels/_compiled.pyx"],
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )


class optional_build_ext(build_ext):
    """Never let a failed extension build break the install."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: skipping compiled kernel build ({exc})")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: skipping {ext.name} ({exc})")


setup(ext_modules=_extensions(), cmdclass={"build_ext": optional_build_ext})
