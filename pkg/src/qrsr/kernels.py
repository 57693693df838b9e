"""Backend selection for the hot kernels.

The compiled extension is preferred. Setting ``QRSR_PURE_PYTHON=1`` in the
environment forces the numpy fallback, which is also used automatically when
the extension was not built.
"""

from __future__ import annotations

import os

from qrsr import _pykernels

if os.environ.get("QRSR_PURE_PYTHON"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from qrsr import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

rs_remainder = _impl.rs_remainder
rs_syndromes = _impl.rs_syndromes
module_stats = _impl.module_stats
gray_gradient = _impl.gray_gradient


def backends() -> dict:
    """All importable backends by name, for benchmarks and parity tests."""
    found = {"python": _pykernels}
    try:
        from qrsr import _ckernels
    except ImportError:
        pass
    else:
        found["cython"] = _ckernels
    return found
