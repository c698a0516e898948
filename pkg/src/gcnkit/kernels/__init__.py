"""Kernel backend selection.

The compiled Cython extension is preferred when it is importable; otherwise
the numpy fallback is used. ``GCNKIT_KERNELS=python`` forces the fallback,
``GCNKIT_KERNELS=compiled`` makes a missing extension a hard error. The
active backend name is exposed as ``BACKEND``.
"""

import os

from . import _fallback

_requested = os.environ.get("GCNKIT_KERNELS", "auto").lower()
if _requested not in ("auto", "compiled", "python"):
    raise ValueError(
        f"GCNKIT_KERNELS must be 'auto', 'compiled' or 'python', got {_requested!r}"
    )

_compiled = None
if _requested != "python":
    try:
        from . import _core as _compiled
    except ImportError:
        if _requested == "compiled":
            raise

if _compiled is not None:
    BACKEND = "compiled"
    _impl = _compiled
else:
    BACKEND = "python"
    _impl = _fallback

spmm = _impl.spmm
csr_matmul = _impl.csr_matmul
walk_end_counts = _impl.walk_end_counts
mix64_scalar = _impl.mix64_scalar


def available_backends():
    out = {"python": _fallback}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out


def get_backend(name):
    """Return a specific backend module (for benchmarks and equivalence tests)."""
    backends = available_backends()
    if name not in backends:
        raise KeyError(f"backend {name!r} not available (have: {sorted(backends)})")
    return backends[name]
