"""Backend selection for the batched detection kernels.

The compiled extension is preferred when it imported cleanly; set
``HNIMSIM_PURE_PYTHON=1`` to force the numpy fallback (used by the
benchmark and the backend-parity tests).
"""

import os

from . import _fallback

if os.environ.get("HNIMSIM_PURE_PYTHON"):
    _impl = _fallback
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fallback

decoupled_ml_batch = _impl.decoupled_ml_batch
llr_batch = _impl.llr_batch
psape_batch = _impl.psape_batch


def backend_name() -> str:
    return _impl.BACKEND


def available_backends():
    """Name -> module for every importable backend."""
    out = {"fallback": _fallback}
    try:
        from . import _native

        out["native"] = _native
    except ImportError:
        pass
    return out
