"""Hot-loop kernels, compiled when available.

The Cython extension is picked at import time. Set ``CVARKIT_PURE_PYTHON=1``
to force the numpy fallback (the benchmark and the kernel tests use this to
compare the two).
"""
import os

from cvarkit import _pykernels

BACKEND = "python"
simulate_var = _pykernels.simulate_var
ma_coefficients = _pykernels.ma_coefficients

if not os.environ.get("CVARKIT_PURE_PYTHON"):
    try:
        from cvarkit import _ckernels
    except ImportError:
        _ckernels = None
    else:
        BACKEND = "cython"
        simulate_var = _ckernels.simulate_var
        ma_coefficients = _ckernels.ma_coefficients

__all__ = ["BACKEND", "simulate_var", "ma_coefficients"]
