"""Backend selection for the numerical hot paths.

Prefers the compiled Cython extension when present; otherwise uses the
NumPy reference implementation.  ``BERGMANLAB_BACKEND=python`` forces the
reference backend (useful for benchmarking the two against each other),
``BERGMANLAB_BACKEND=compiled`` makes a missing extension a hard error.
"""

import os

from . import reference

_requested = os.environ.get("BERGMANLAB_BACKEND", "").strip().lower()

if _requested == "python":
    _impl = reference
    BACKEND = "python"
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        _impl = reference
        BACKEND = "python"

pairwise_sum = _impl.pairwise_sum
pairwise_sum_axis = reference.pairwise_sum_axis  # array-shaped; NumPy only
kernel_weighted_sums = _impl.kernel_weighted_sums
pseudo_distances = _impl.pseudo_distances
greedy_farthest = _impl.greedy_farthest

__all__ = [
    "BACKEND",
    "pairwise_sum",
    "pairwise_sum_axis",
    "kernel_weighted_sums",
    "pseudo_distances",
    "greedy_farthest",
    "reference",
]
