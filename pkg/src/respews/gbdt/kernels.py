"""Split-kernel selection: compiled extension if built, numpy fallback otherwise."""

from __future__ import annotations

try:
    from respews.gbdt import _split_core as _impl

    KERNEL_IMPL = "compiled"
except ImportError:  # extension not built; numpy fallback is ~10-30x slower
    from respews.gbdt import _fallback as _impl

    KERNEL_IMPL = "fallback"

from respews.gbdt import _fallback as fallback_impl

find_best_split = _impl.find_best_split
partition_rows = _impl.partition_rows


def get_impl(name: str):
    """Explicit implementation lookup, used by tests and the benchmark."""
    if name == "fallback":
        return fallback_impl
    if name == "compiled":
        if KERNEL_IMPL != "compiled":
            raise ImportError("compiled split kernels are not available")
        return _impl
    if name == "auto":
        return _impl
    raise ValueError(f"unknown kernel implementation {name!r}")
