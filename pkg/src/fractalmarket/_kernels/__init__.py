"""Hot-kernel dispatch.

Imports the compiled extension when available, otherwise the pure
numpy/Python fallback. Set FRACTALMARKET_PURE=1 to force the fallback
(useful for benchmarking and debugging).
"""

import os

_force_pure = os.environ.get("FRACTALMARKET_PURE", "").strip() not in ("", "0")

if _force_pure:
    from . import _fallback as _impl
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _fallback as _impl

IMPLEMENTATION = _impl.IMPLEMENTATION
USING_COMPILED = IMPLEMENTATION == "compiled"

stieltjes_running = _impl.stieltjes_running
sum_squared_increments = _impl.sum_squared_increments
cross_increment_sum = _impl.cross_increment_sum
heston_full_truncation = _impl.heston_full_truncation
ou_euler = _impl.ou_euler
euler_price = _impl.euler_price

__all__ = [
    "IMPLEMENTATION",
    "USING_COMPILED",
    "stieltjes_running",
    "sum_squared_increments",
    "cross_increment_sum",
    "heston_full_truncation",
    "ou_euler",
    "euler_price",
]
