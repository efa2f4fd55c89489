"""Density-kernel backend selection.

The compiled extension is preferred when it imported cleanly; the NumPy
implementation is the fallback and the reference.  ``SMM_KERNEL=python`` (or
``c``) in the environment forces a backend at import; :func:`set_backend`
switches at runtime (used by the tests and the benchmark).
"""

from __future__ import annotations

import os

from . import numpy_backend

_IMPLS = {"python": numpy_backend.cluster_logdens}

try:
    from . import _gauss
    _IMPLS["c"] = _gauss.cluster_logdens
except ImportError:
    _gauss = None

_forced = os.environ.get("SMM_KERNEL", "auto").lower()
if _forced not in ("auto", "c", "python"):
    raise ValueError(f"SMM_KERNEL must be auto, c or python, not {_forced!r}")
if _forced == "c" and "c" not in _IMPLS:
    raise ImportError("SMM_KERNEL=c but the compiled kernel is unavailable")

_active = _forced if _forced != "auto" else ("c" if "c" in _IMPLS else "python")


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_IMPLS))


def active_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in _IMPLS:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")
    _active = name


def cluster_logdens(y, logw, mu, factor, logdet):
    """Dispatch to the active backend; see numpy_backend for the contract."""
    if _active == "c":
        import numpy as np
        y, logw, mu, factor, logdet = (np.ascontiguousarray(a, dtype=float)
                                       for a in (y, logw, mu, factor, logdet))
    return _IMPLS[_active](y, logw, mu, factor, logdet)
