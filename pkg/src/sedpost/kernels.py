"""Kernel backend selection.

Imports the compiled extension when available and falls back to the
pure-Python implementation otherwise. Both backends return bit-identical
results; the compiled one is roughly two orders of magnitude faster on
the optimizer's inner loop (see benchmarks/bench_kernels.py).

The SEDPOST_KERNELS environment variable overrides the choice:
  auto    compiled if available, else pure Python (default)
  cython  compiled, ImportError if the extension is missing
  python  pure Python, even when the extension is available
"""

from __future__ import annotations

import os

_choice = os.environ.get("SEDPOST_KERNELS", "auto").strip().lower()

if _choice in ("", "auto"):
    try:
        from . import _kernels as _impl
    except ImportError:
        from . import _kernels_py as _impl
elif _choice == "cython":
    from . import _kernels as _impl
elif _choice == "python":
    from . import _kernels_py as _impl
else:
    raise ImportError(
        f"SEDPOST_KERNELS={_choice!r} not understood; use auto, cython or python"
    )

BACKEND: str = _impl.BACKEND

moving_average = _impl.moving_average
binarize_absolute = _impl.binarize_absolute
binarize_hysteresis = _impl.binarize_hysteresis
binarize_slope = _impl.binarize_slope
mask_to_runs = _impl.mask_to_runs
merge_prune_runs = _impl.merge_prune_runs

__all__ = [
    "BACKEND",
    "binarize_absolute",
    "binarize_hysteresis",
    "binarize_slope",
    "mask_to_runs",
    "merge_prune_runs",
    "moving_average",
]
