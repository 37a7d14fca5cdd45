"""Kernel selection.

The compiled extension is used when it was built and ``STARJET_PURE`` is not
set; the pure-Python module is the fallback.  Both expose the same four
functions with identical results.
"""

import os

from starjet.coeffring import _pykernels

IMPLEMENTATION = "python"
_impl = _pykernels

if not os.environ.get("STARJET_PURE"):
    try:
        from starjet.coeffring import _ckernels as _impl  # type: ignore[no-redef]

        IMPLEMENTATION = "cython"
    except ImportError:
        _impl = _pykernels

mul_affine = _impl.mul_affine
mul_torus = _impl.mul_torus
axpy = _impl.axpy
clean = _impl.clean
