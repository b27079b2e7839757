"""Event-based scoring of predicted events against strong annotations.

A predicted event counts as correct when its onset lies within a fixed
collar of a reference onset and its offset within max(collar, ratio *
reference length) of the reference offset; matching is per clip and per
class, greedy, and fully deterministic. Per-class F1 scores are averaged
into the macro-F1; the error rate pools deletions and insertions over the
reference count and can exceed 1.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable, Mapping, NamedTuple

from .core import AnnotationSet, Event, ScoreReport

__all__ = ["MatchCounts", "match_events", "score"]

DEFAULT_ONSET_COLLAR = 0.2
DEFAULT_OFFSET_RATIO = 0.2


class MatchCounts(NamedTuple):
    tp: int
    fp: int
    fn: int


def _greedy_match(refs: list[Event], preds: list[Event], onset_collar: float,
                  offset_ratio: float) -> int:
    """Number of matched pairs between same-clip same-class event lists.

    References are visited sorted by onset; each takes the eligible
    unmatched prediction with the smallest onset distance, ties going to
    the earliest prediction. The tie-breaks make the outcome independent
    of input order.
    """
    refs = sorted(refs, key=lambda ev: (ev.onset, ev.offset))
    preds = sorted(preds, key=lambda ev: (ev.onset, ev.offset))
    taken = [False] * len(preds)
    matched = 0
    for ref in refs:
        offset_collar = max(onset_collar, offset_ratio * ref.length)
        best = -1
        best_dist = None
        for j, pred in enumerate(preds):
            if taken[j]:
                continue
            dist = abs(pred.onset - ref.onset)
            if dist > onset_collar:
                continue
            if abs(pred.offset - ref.offset) > offset_collar:
                continue
            if best_dist is None or dist < best_dist:
                best = j
                best_dist = dist
        if best >= 0:
            taken[best] = True
            matched += 1
    return matched


def match_events(
    ref: Iterable[Event],
    pred: Iterable[Event],
    onset_collar: float = DEFAULT_ONSET_COLLAR,
    offset_ratio: float = DEFAULT_OFFSET_RATIO,
) -> dict[tuple[str, str], MatchCounts]:
    """Match predictions to references within collars, per clip and class.

    Parameters
    ----------
    ref, pred : iterable of Event
        Reference and predicted events; any mix of clips and classes.
    onset_collar : float
        Tolerance on onsets, seconds (>= 0).
    offset_ratio : float
        Offsets must agree within max(onset_collar, offset_ratio *
        reference event length); in [0, 1].

    Returns
    -------
    dict mapping (clip_id, class_name) -> MatchCounts(tp, fp, fn)
        One entry per (clip, class) that has any reference or prediction.
    """
    if onset_collar < 0:
        raise ValueError(f"onset_collar must be >= 0, got {onset_collar}")
    if not 0.0 <= offset_ratio <= 1.0:
        raise ValueError(f"offset_ratio must be in [0, 1], got {offset_ratio}")
    ref_groups: dict[tuple[str, str], list[Event]] = defaultdict(list)
    pred_groups: dict[tuple[str, str], list[Event]] = defaultdict(list)
    for ev in ref:
        ref_groups[(ev.clip_id, ev.class_name)].append(ev)
    for ev in pred:
        pred_groups[(ev.clip_id, ev.class_name)].append(ev)

    counts: dict[tuple[str, str], MatchCounts] = {}
    for key in sorted(set(ref_groups) | set(pred_groups)):
        refs = ref_groups.get(key, [])
        preds = pred_groups.get(key, [])
        tp = _greedy_match(refs, preds, onset_collar, offset_ratio)
        counts[key] = MatchCounts(tp=tp, fp=len(preds) - tp, fn=len(refs) - tp)
    return counts


def f1_from_counts(tp: int, fp: int, fn: int) -> float:
    """2 tp / (2 tp + fp + fn); zero when the class was never seen correctly."""
    denom = 2 * tp + fp + fn
    if denom == 0:
        return 0.0
    return 2 * tp / denom


def score(
    annotations: AnnotationSet,
    predictions: Iterable[Event],
    onset_collar: float = DEFAULT_ONSET_COLLAR,
    offset_ratio: float = DEFAULT_OFFSET_RATIO,
    class_names: Iterable[str] | None = None,
) -> ScoreReport:
    """Score predicted events against an annotation set.

    Counts are pooled over clips per class; per-class F1 scores average
    into the macro-F1. Classes with neither references nor predictions do
    not enter the average (their F1 would be 0/0). The error rate is
    (deletions + insertions) / references, pooled over classes; with no
    references at all it is 0 for an empty prediction list and inf
    otherwise.

    ``class_names`` optionally fixes the report's class universe (classes
    outside it raise); per-class entries are still reported for every
    class in it, including the neither-refs-nor-preds ones.
    """
    predictions = list(predictions)
    for ev in predictions:
        if ev.clip_id not in annotations.clips:
            raise ValueError(f"prediction references unknown clip {ev.clip_id!r}")

    per_clip = match_events(annotations.events, predictions, onset_collar, offset_ratio)
    by_class: dict[str, list[int]] = defaultdict(lambda: [0, 0, 0])
    for (_, class_name), c in per_clip.items():
        acc = by_class[class_name]
        acc[0] += c.tp
        acc[1] += c.fp
        acc[2] += c.fn

    if class_names is not None:
        universe = list(class_names)
        unknown = sorted(set(by_class) - set(universe))
        if unknown:
            raise ValueError(f"events reference classes outside the class list: {unknown}")
    else:
        universe = sorted(by_class)

    counts = {}
    per_class_f1 = {}
    included = []
    for name in universe:
        tp, fp, fn = by_class.get(name, [0, 0, 0])
        counts[name] = (tp, fp, fn)
        f1 = f1_from_counts(tp, fp, fn)
        per_class_f1[name] = f1
        if tp + fp + fn > 0:
            included.append(f1)

    macro_f1 = sum(included) / len(included) if included else 0.0
    n_ref = sum(tp + fn for tp, _, fn in counts.values())
    n_del = sum(fn for _, _, fn in counts.values())
    n_ins = sum(fp for _, fp, _ in counts.values())
    if n_ref > 0:
        error_rate = (n_del + n_ins) / n_ref
    else:
        error_rate = 0.0 if n_ins == 0 else float("inf")
    return ScoreReport(
        counts=counts,
        per_class_f1=per_class_f1,
        macro_f1=macro_f1,
        error_rate=error_rate,
    )
