"""Turning probability curves into timed events.

Eight segmentation methods share one pipeline per class: smooth the curve
(parametric methods only), binarize it, turn the boolean mask into frame
runs, merge runs separated by less than the tolerance margin, drop runs
shorter than it, and convert the survivors to events in seconds.

Method ids
----------
- cidwa / cddwa: data-wise average threshold, one aggregate for all
  classes / one per class (no smoothing, no tuned parameters)
- cia / cda: absolute threshold, class-independent / class-dependent
- cih / cdh: hysteresis (enter high, leave low)
- cis / cds: slope (enter on fast rise, leave on fall or plateau)

Comparison conventions are fixed as enter/active on >=, exit on <, which
makes hysteresis with equal thresholds degenerate exactly to the absolute
threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .core import (
    ClipPrediction,
    ConfigurationError,
    Event,
    ParameterError,
    Segment,
    SegmenterConfig,
    is_class_dependent,
    is_parametric,
)

__all__ = [
    "DatasetThresholds",
    "binarize_absolute",
    "binarize_hysteresis",
    "binarize_slope",
    "compute_datawise_thresholds",
    "mask_to_segments",
    "merge_and_prune",
    "segment_clip",
    "segment_dataset",
]


@dataclass(frozen=True)
class DatasetThresholds:
    """Data-wise average thresholds: one per class plus their aggregate."""

    per_class: Mapping[str, float]
    global_threshold: float

    def __post_init__(self):
        object.__setattr__(self, "per_class", dict(self.per_class))


def compute_datawise_thresholds(dataset: Sequence[ClipPrediction]) -> DatasetThresholds:
    """Average probability of each class over all frames of the dataset.

    Every frame weighs the same (clips contribute proportionally to their
    frame count); the global threshold is the mean of the per-class ones.
    Accumulation runs in clip order so the result is deterministic.
    """
    if not dataset:
        raise ValueError("cannot compute thresholds from an empty dataset")
    class_names = dataset[0].class_names
    for pred in dataset:
        if pred.class_names != class_names:
            raise ValueError(
                f"clip {pred.clip_id!r} has class list {pred.class_names}, "
                f"expected {class_names}"
            )
    sums = np.zeros(len(class_names), dtype=np.float64)
    frames = 0
    for pred in dataset:
        sums += pred.probs.sum(axis=0)
        frames += pred.n_frames
    per_class = sums / frames
    return DatasetThresholds(
        per_class=dict(zip(class_names, per_class.tolist())),
        global_threshold=float(per_class.mean()),
    )


def binarize_absolute(curve: np.ndarray, t: float) -> np.ndarray:
    """Boolean mask of frames with probability >= t."""
    if not 0.0 <= t <= 1.0:
        raise ParameterError(f"t must be in [0, 1], got {t}")
    return kernels.binarize_absolute(np.asarray(curve, dtype=np.float64), t).astype(bool)


def binarize_hysteresis(curve: np.ndarray, t_high: float, t_low: float) -> np.ndarray:
    """Hysteresis mask: activate on curve >= t_high, deactivate on curve < t_low.

    The onset threshold is the high one, the offset threshold the low one,
    so unstable curves hovering between the two do not chatter. With
    t_high == t_low == t this equals ``binarize_absolute(curve, t)``.
    """
    if not 0.0 <= t_low <= t_high <= 1.0:
        raise ParameterError(
            f"need 0 <= t_low <= t_high <= 1, got t_low={t_low} t_high={t_high}"
        )
    return kernels.binarize_hysteresis(
        np.asarray(curve, dtype=np.float64), t_high, t_low
    ).astype(bool)


def binarize_slope(
    curve: np.ndarray,
    k: int,
    rise: float,
    fall: float,
    plateau_eps: float,
    plateau_len: int,
) -> np.ndarray:
    """Slope mask: activate on a fast rise, deactivate on a fast fall or plateau.

    Works without any fixed probability level: the lag-k slope
    ``(curve[i] - curve[i-k]) / k`` (0 for the first k frames) drives a
    state machine that enters on slope >= rise and leaves on slope <=
    -fall or after plateau_len consecutive frames with |slope| <
    plateau_eps. The terminating frame is excluded and a later rise may
    open a new segment; a segment still open at the clip end closes there.
    """
    if int(k) != k or k < 1:
        raise ParameterError(f"k must be an integer >= 1, got {k}")
    if rise < 0 or fall < 0:
        raise ParameterError(f"rise and fall must be >= 0, got {rise}, {fall}")
    if plateau_eps < 0:
        raise ParameterError(f"plateau_eps must be >= 0, got {plateau_eps}")
    if int(plateau_len) != plateau_len or plateau_len < 1:
        raise ParameterError(f"plateau_len must be an integer >= 1, got {plateau_len}")
    return kernels.binarize_slope(
        np.asarray(curve, dtype=np.float64),
        int(k),
        rise,
        fall,
        plateau_eps,
        int(plateau_len),
    ).astype(bool)


def mask_to_segments(mask: np.ndarray, class_index: int) -> list[Segment]:
    """Maximal runs of true as half-open [start, end) segments, ascending."""
    runs = kernels.mask_to_runs(np.asarray(mask).astype(np.uint8))
    return [Segment(class_index, int(s), int(e)) for s, e in runs]


def merge_and_prune(
    segments: Iterable[Segment], min_gap_frames: int, min_len_frames: int
) -> list[Segment]:
    """Merge segments separated by a gap < min_gap_frames, then drop those
    shorter than min_len_frames.

    Expects sorted, non-overlapping segments of a single class. Merging
    runs first: pruning first could delete fragments that merging would
    legitimately rejoin. The operation is idempotent.
    """
    segments = list(segments)
    if not segments:
        return []
    if min_gap_frames < 0 or min_len_frames < 0:
        raise ParameterError("margins must be >= 0")
    class_index = segments[0].class_index
    runs = np.array([(s.start_frame, s.end_frame) for s in segments], dtype=np.int64)
    out = kernels.merge_prune_runs(runs, min_gap_frames, min_len_frames)
    return [Segment(class_index, int(s), int(e)) for s, e in out]


def _binarize_for(method: str, curve: np.ndarray, params: Mapping[str, float]) -> np.ndarray:
    if method in ("cia", "cda"):
        return kernels.binarize_absolute(curve, params["t"])
    if method in ("cih", "cdh"):
        return kernels.binarize_hysteresis(curve, params["t_high"], params["t_low"])
    return kernels.binarize_slope(
        curve,
        int(params["k"]),
        params["rise"],
        params["fall"],
        params["plateau_eps"],
        int(params["plateau_len"]),
    )


def segment_clip(
    pred: ClipPrediction,
    config: SegmenterConfig,
    thresholds: DatasetThresholds | None = None,
    oracle: Mapping[str, frozenset[str] | set[str]] | None = None,
) -> list[Event]:
    """Run the full per-clip pipeline and return events in seconds.

    Parameters
    ----------
    pred : ClipPrediction
        The (unsmoothed) localizer output for one clip.
    config : SegmenterConfig
        Method, parameters and merge/prune margins.
    thresholds : DatasetThresholds, optional
        Required by the data-wise average methods (cidwa uses the global
        aggregate for every class, cddwa the per-class values). Ignored by
        the parametric methods.
    oracle : mapping clip_id -> set of class names, optional
        Audio-tagging oracle: when given, only the clip's tagged classes
        are segmented, mimicking a perfect clip-level classifier. A clip
        absent from the mapping has no tags. Tag names must belong to the
        prediction's class list.

    Returns
    -------
    list of Event sorted by (onset, class_name).
    """
    method = config.method
    statistic = not is_parametric(method)
    if statistic:
        if thresholds is None:
            raise ConfigurationError(f"method {method!r} needs dataset thresholds")
        missing = [c for c in pred.class_names if c not in thresholds.per_class]
        if missing:
            raise ConfigurationError(f"dataset thresholds missing classes {missing}")
    elif is_class_dependent(method):
        # exactly one parameter set per class, checked up front so a
        # config/class-list mismatch fails loudly even under the oracle
        for name in pred.class_names:
            config.params_for(name)

    if oracle is not None:
        tags = frozenset(oracle.get(pred.clip_id, frozenset()))
        unknown = tags.difference(pred.class_names)
        if unknown:
            raise ConfigurationError(
                f"oracle tags {sorted(unknown)} not in the class list of clip {pred.clip_id!r}"
            )
        class_names = [c for c in pred.class_names if c in tags]
    else:
        class_names = list(pred.class_names)

    events = []
    for name in class_names:
        c = pred.class_index(name)
        curve = pred.probs[:, c]
        if statistic:
            if method == "cidwa":
                t = thresholds.global_threshold
            else:
                t = thresholds.per_class[name]
            mask = kernels.binarize_absolute(curve, t)
        else:
            params = config.params_for(name)
            smoothed = kernels.moving_average(curve, int(params["window"]))
            mask = _binarize_for(method, smoothed, params)
        runs = kernels.mask_to_runs(mask)
        runs = kernels.merge_prune_runs(runs, config.min_gap_frames, config.min_len_frames)
        for start, end in runs:
            events.append(
                Event(
                    clip_id=pred.clip_id,
                    onset=start * pred.frame_duration,
                    offset=end * pred.frame_duration,
                    class_name=name,
                )
            )
    events.sort(key=lambda ev: (ev.onset, ev.class_name))
    return events


def segment_dataset(
    dataset: Sequence[ClipPrediction],
    config: SegmenterConfig,
    thresholds: DatasetThresholds | None = None,
    oracle: Mapping[str, frozenset[str] | set[str]] | None = None,
) -> list[Event]:
    """segment_clip over a dataset; computes data-wise thresholds on demand."""
    if not is_parametric(config.method) and thresholds is None:
        thresholds = compute_datawise_thresholds(dataset)
    events = []
    for pred in dataset:
        events.extend(segment_clip(pred, config, thresholds=thresholds, oracle=oracle))
    return events
