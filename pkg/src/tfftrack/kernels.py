"""Backend selection for the grid inner loops.

The Cython extension is preferred when it is built; the numpy fallback is
always available. Set TFFTRACK_BACKEND to "compiled" or "python" to force
a choice, "auto" (the default) picks the extension when importable.
"""

from __future__ import annotations

import os

from . import _kernels_py

_requested = os.environ.get("TFFTRACK_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "compiled", "python"):
    raise ValueError(f"unknown TFFTRACK_BACKEND value {_requested!r}")

_compiled = None
if _requested in ("auto", "compiled"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None
if _requested == "compiled" and _compiled is None:
    raise ImportError("TFFTRACK_BACKEND=compiled but the tfftrack._kernels "
                      "extension is not built")

_impl = _compiled if _compiled is not None else _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"

ribbon_accumulate = _impl.ribbon_accumulate
sample_bilinear = _impl.sample_bilinear
line_integral = _impl.line_integral
gaussian_peak_max = _impl.gaussian_peak_max
disc_accumulate = _impl.disc_accumulate


def available_backends() -> list:
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401
        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


def get_backend(name: str):
    """Return the module implementing the kernel set for `name`."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
