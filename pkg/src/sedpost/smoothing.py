"""Probability-curve smoothing applied ahead of segmentation.

A centered simple moving average with an odd window; at the clip edges the
window shrinks symmetrically and the mean is renormalized by the actual
window length, so boundary probabilities are not dragged toward zero.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from . import kernels
from .core import ClipPrediction, ConfigurationError, ParameterError

__all__ = ["smooth_clip", "smooth_moving_average"]


def _check_window(window: int) -> int:
    if int(window) != window or window < 1 or window % 2 == 0:
        raise ParameterError(f"smoothing window must be an odd integer >= 1, got {window}")
    return int(window)


def smooth_moving_average(curve: np.ndarray, window: int) -> np.ndarray:
    """Smooth one probability curve with a centered moving average.

    Parameters
    ----------
    curve : array-like, shape (T,)
        Finite values; probabilities in the normal use.
    window : int
        Odd window length >= 1; 1 is the identity.

    Returns
    -------
    ndarray, shape (T,)
        Smoothed curve; every output value lies within
        [min(curve), max(curve)].
    """
    window = _check_window(window)
    x = np.asarray(curve, dtype=np.float64)
    if x.ndim != 1:
        raise ParameterError(f"curve must be 1-D, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ParameterError("curve contains non-finite values")
    return kernels.moving_average(x, window)


def smooth_clip(
    pred: ClipPrediction, windows: int | Mapping[str, int]
) -> ClipPrediction:
    """Smooth every class curve of a clip.

    ``windows`` is either one global window or a mapping class name ->
    window covering all classes of the clip (the window may differ per
    class). Returns a new ClipPrediction; the input is left untouched.
    """
    if isinstance(windows, Mapping):
        missing = [name for name in pred.class_names if name not in windows]
        if missing:
            raise ConfigurationError(f"no smoothing window for classes {missing}")
        per_class = [int(windows[name]) for name in pred.class_names]
    else:
        per_class = [int(windows)] * pred.n_classes

    out = np.empty_like(pred.probs)
    for c, window in enumerate(per_class):
        out[:, c] = smooth_moving_average(pred.probs[:, c], window)
    return ClipPrediction(
        clip_id=pred.clip_id,
        probs=out,
        frame_duration=pred.frame_duration,
        class_names=pred.class_names,
    )
