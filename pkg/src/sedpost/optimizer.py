"""Parameter tuning for the parametric segmentation methods.

Two derivative-free searches over named parameter boxes:

- ``coarse_grid_search``: exhaustive evaluation of explicit value lists.
- ``dichotomic_search``: lays an evenly spaced grid across the current
  bounds, evaluates every combination, then re-centers the bounds around
  the best point (best +/- one grid spacing, clipped to the global
  bounds) and repeats for a fixed number of steps. Each step shrinks the
  span by 2/(points-1), so precision grows geometrically while the cost
  per step stays constant.

Both searches are deterministic: grids are laid in ascending order,
Cartesian products are walked lexicographically, and ties on the
objective go to the lexicographically smallest parameter vector, so the
result does not depend on evaluation order or scheduling.

The pipeline objectives run smooth -> binarize -> merge/prune -> score
over a dataset with the audio-tagging oracle on. Class-independent
methods maximize macro-F1 with one shared parameter set; class-dependent
methods run one search per class maximizing that class's F1, which is
exactly equivalent to maximizing macro-F1 jointly (parameters are
class-disjoint) at 1/C-th of the grid size per search.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from . import kernels
from .core import (
    AnnotationSet,
    ClipPrediction,
    ConfigurationError,
    Event,
    ParameterError,
    ParameterRange,
    ParameterSpace,
    SegmenterConfig,
    default_margin_frames,
    is_class_dependent,
    required_params,
)
from .dataio import derive_weak_tags
from .metrics import (
    DEFAULT_OFFSET_RATIO,
    DEFAULT_ONSET_COLLAR,
    f1_from_counts,
    match_events,
)

__all__ = [
    "OptimizationOutcome",
    "SearchResult",
    "SearchStep",
    "coarse_grid_search",
    "dichotomic_search",
    "optimize_class_dependent",
    "optimize_class_independent",
]

Objective = Callable[[Mapping[str, float]], float]


@dataclass(frozen=True)
class SearchStep:
    """One refinement step: the bounds it searched, the grid it laid, its best."""

    bounds: Mapping[str, tuple[float, float]]
    grid: Mapping[str, tuple[float, ...]]
    best_params: Mapping[str, float]
    best_value: float
    n_evaluations: int


@dataclass(frozen=True)
class SearchResult:
    """Best assignment over every evaluated point, with the per-step trace."""

    best_params: Mapping[str, float]
    best_value: float
    n_evaluations: int
    steps: tuple[SearchStep, ...]


def _evaluate_grid(
    objective: Objective, names: Sequence[str], values: Sequence[Sequence[float]]
) -> tuple[dict[str, float], float, int]:
    """Evaluate the full Cartesian product; ties go to the smallest vector.

    Value lists must be ascending; walking the product lexicographically
    then makes the first strict maximum the lexicographically smallest
    argmax, independent of any evaluation parallelism.
    """
    best_vec = None
    best_value = -math.inf
    count = 0
    for vec in itertools.product(*values):
        value = objective(dict(zip(names, vec)))
        count += 1
        if math.isnan(value):
            value = -math.inf
        if best_vec is None or value > best_value:
            best_vec = vec
            best_value = value
    return dict(zip(names, best_vec)), best_value, count


def coarse_grid_search(
    objective: Objective, grid: Mapping[str, Sequence[float]]
) -> SearchResult:
    """Exhaustively evaluate explicit per-parameter value lists.

    Values are sorted and deduplicated per dimension; the full Cartesian
    product is evaluated and the argmax returned, ties broken by the
    lexicographically smallest parameter vector.
    """
    if not grid:
        raise ParameterError("empty grid")
    names = list(grid)
    values = []
    for name in names:
        vals = sorted(set(grid[name]))
        if not vals:
            raise ParameterError(f"no values for parameter {name!r}")
        values.append(vals)
    best_params, best_value, count = _evaluate_grid(objective, names, values)
    step = SearchStep(
        bounds={n: (v[0], v[-1]) for n, v in zip(names, values)},
        grid={n: tuple(v) for n, v in zip(names, values)},
        best_params=best_params,
        best_value=best_value,
        n_evaluations=count,
    )
    return SearchResult(
        best_params=best_params,
        best_value=best_value,
        n_evaluations=count,
        steps=(step,),
    )


def _snap_odd(value: float, lo: float, hi: float) -> int:
    """Nearest odd integer to value, pulled inside [lo, hi]."""
    odd = 2 * round((value - 1.0) / 2.0) + 1
    first = int(math.ceil(lo))
    first = first if first % 2 == 1 else first + 1
    last = int(math.floor(hi))
    last = last if last % 2 == 1 else last - 1
    return int(min(max(odd, first), last))


def _lay_axis(p: ParameterRange, lo: float, hi: float, points: int) -> list[float]:
    """Evenly spaced values over [lo, hi], snapped to the parameter kind."""
    if lo == hi:
        raw = [lo]
    else:
        raw = np.linspace(lo, hi, points).tolist()
    if p.kind == "odd-int":
        snapped = [_snap_odd(v, lo, hi) for v in raw]
        return sorted(set(snapped))
    return raw


def dichotomic_search(objective: Objective, space: ParameterSpace) -> SearchResult:
    """Iterative grid refinement over a parameter box.

    Per step and per dimension, ``points_per_dim`` equally spaced values
    span the current bounds (odd-integer dimensions snap to odd values
    and deduplicate); the full product is evaluated, and the next bounds
    are best +/- one grid spacing, clipped to the global bounds. A
    dimension with equal bounds stays frozen at that value. After
    ``steps`` steps the best assignment seen anywhere is returned; never
    a point outside the global bounds, never an unevaluated point.
    """
    names = list(space.names)
    global_bounds = {p.name: (p.lower, p.upper) for p in space.parameters}
    bounds = dict(global_bounds)
    points = space.points_per_dim

    overall_params = None
    overall_value = -math.inf
    total = 0
    steps = []
    for _ in range(space.steps):
        axes = [
            _lay_axis(p, bounds[p.name][0], bounds[p.name][1], points)
            for p in space.parameters
        ]
        best_params, best_value, count = _evaluate_grid(objective, names, axes)
        total += count
        steps.append(
            SearchStep(
                bounds=dict(bounds),
                grid={n: tuple(a) for n, a in zip(names, axes)},
                best_params=best_params,
                best_value=best_value,
                n_evaluations=count,
            )
        )
        if overall_params is None or best_value > overall_value:
            overall_params = best_params
            overall_value = best_value
        new_bounds = {}
        for p in space.parameters:
            lo, hi = bounds[p.name]
            spacing = (hi - lo) / (points - 1)
            center = best_params[p.name]
            glo, ghi = global_bounds[p.name]
            new_bounds[p.name] = (max(center - spacing, glo), min(center + spacing, ghi))
        bounds = new_bounds
    return SearchResult(
        best_params=overall_params,
        best_value=overall_value,
        n_evaluations=total,
        steps=tuple(steps),
    )


# ---------------------------------------------------------------------------
# pipeline objectives
# ---------------------------------------------------------------------------

# (lower, upper) limits a search box must respect, per parameter
_PARAM_LIMITS = {
    "window": (1.0, math.inf),
    "t": (0.0, 1.0),
    "t_high": (0.0, 1.0),
    "t_low": (0.0, 1.0),
    "k": (1.0, math.inf),
    "rise": (0.0, math.inf),
    "fall": (0.0, math.inf),
    "plateau_eps": (0.0, math.inf),
    "plateau_len": (1.0, math.inf),
}

_INT_PARAMS = ("k", "plateau_len")


def _validate_space(method: str, space: ParameterSpace) -> None:
    needed = set(required_params(method))
    if not needed:
        raise ConfigurationError(f"method {method!r} has no parameters to optimize")
    have = set(space.names)
    if have != needed:
        raise ConfigurationError(
            f"space parameters {sorted(have)} do not match method {method!r} "
            f"parameters {sorted(needed)}"
        )
    for p in space.parameters:
        lo, hi = _PARAM_LIMITS[p.name]
        if p.lower < lo or p.upper > hi:
            raise ParameterError(
                f"{p.name}: bounds [{p.lower}, {p.upper}] outside [{lo}, {hi}]"
            )
        if p.name == "window" and p.kind != "odd-int":
            raise ParameterError("window must be an odd-int parameter")


def _effective_params(method: str, raw: Mapping[str, float]) -> dict[str, float] | None:
    """Grid point -> segmenter parameters; None when infeasible (hysteresis)."""
    params = dict(raw)
    if method in ("cih", "cdh") and params["t_low"] > params["t_high"]:
        return None
    for name in _INT_PARAMS:
        if name in params:
            params[name] = max(1, int(round(params[name])))
    params["window"] = int(params["window"])
    return params


class _PipelineEvaluator:
    """Repeated pipeline evaluation over a fixed dataset, with smoothing cache.

    Curves are pre-extracted per class for the clips the oracle tags with
    that class; smoothing results are cached by (clip, class, window),
    which is what makes threshold-only grid sweeps cheap. The computation
    is identical to segment_clip + score, checked by the test suite.
    """

    def __init__(
        self,
        dataset: Sequence[ClipPrediction],
        annotations: AnnotationSet,
        onset_collar: float,
        offset_ratio: float,
        min_gap_frames: int,
        min_len_frames: int,
    ):
        if not dataset:
            raise ValueError("empty dataset")
        self.class_names = dataset[0].class_names
        for pred in dataset:
            if pred.class_names != self.class_names:
                raise ValueError(f"clip {pred.clip_id!r} has a different class list")
        ann_classes = set(annotations.class_names)
        unknown = sorted(ann_classes.difference(self.class_names))
        if unknown:
            raise ConfigurationError(
                f"annotated classes {unknown} have no prediction curves"
            )
        self.frame_duration = dataset[0].frame_duration
        self.onset_collar = onset_collar
        self.offset_ratio = offset_ratio
        self.min_gap = min_gap_frames
        self.min_len = min_len_frames

        oracle = derive_weak_tags(annotations)
        # per class: curves of the clips tagged with it (oracle restriction)
        self.curves: dict[str, list[tuple[str, np.ndarray]]] = {
            name: [] for name in self.class_names
        }
        for pred in dataset:
            tags = oracle.get(pred.clip_id, frozenset())
            for name in tags:
                c = pred.class_names.index(name)
                self.curves[name].append((pred.clip_id, pred.probs[:, c]))
        # references per class per clip; clips without curves still count
        # (their events become misses, as a full rescore would count them)
        self.refs: dict[str, dict[str, list[Event]]] = {
            name: {} for name in self.class_names
        }
        for ev in annotations.events:
            self.refs[ev.class_name].setdefault(ev.clip_id, []).append(ev)
        self.scored_classes = tuple(
            name for name in self.class_names if self.refs[name]
        )
        self._smooth_cache: dict[tuple[str, str, int], np.ndarray] = {}

    def _smoothed(self, class_name: str, clip_id: str, curve: np.ndarray, window: int) -> np.ndarray:
        if window == 1:
            return curve
        key = (class_name, clip_id, window)
        out = self._smooth_cache.get(key)
        if out is None:
            out = kernels.moving_average(curve, window)
            self._smooth_cache[key] = out
        return out

    def class_counts(self, class_name: str, method: str, params: Mapping[str, float]) -> tuple[int, int, int]:
        """Pooled (tp, fp, fn) of one class under one parameter set."""
        window = int(params["window"])
        refs_by_clip = self.refs[class_name]
        delta = self.frame_duration
        tp = fp = 0
        matched_clips = 0
        for clip_id, curve in self.curves[class_name]:
            smoothed = self._smoothed(class_name, clip_id, curve, window)
            if method in ("cia", "cda"):
                mask = kernels.binarize_absolute(smoothed, params["t"])
            elif method in ("cih", "cdh"):
                mask = kernels.binarize_hysteresis(smoothed, params["t_high"], params["t_low"])
            else:
                mask = kernels.binarize_slope(
                    smoothed,
                    int(params["k"]),
                    params["rise"],
                    params["fall"],
                    params["plateau_eps"],
                    int(params["plateau_len"]),
                )
            runs = kernels.merge_prune_runs(
                kernels.mask_to_runs(mask), self.min_gap, self.min_len
            )
            preds = [
                Event(clip_id, start * delta, end * delta, class_name)
                for start, end in runs
            ]
            refs = refs_by_clip.get(clip_id, [])
            if refs or preds:
                counts = match_events(refs, preds, self.onset_collar, self.offset_ratio)
                c = counts[(clip_id, class_name)]
                tp += c.tp
                fp += c.fp
                if refs:
                    matched_clips += 1
        n_ref = sum(len(evs) for evs in refs_by_clip.values())
        fn = n_ref - tp
        return tp, fp, fn

    def class_f1(self, class_name: str, method: str, params: Mapping[str, float]) -> float:
        return f1_from_counts(*self.class_counts(class_name, method, params))

    def macro_f1(self, method: str, params_by_class: Mapping[str, Mapping[str, float]]) -> float:
        """Mean F1 over the classes that have references (the others can
        produce no predictions under the oracle and stay out of the mean,
        matching metrics.score)."""
        if not self.scored_classes:
            return 0.0
        f1s = [
            self.class_f1(name, method, params_by_class[name])
            for name in self.scored_classes
        ]
        return sum(f1s) / len(f1s)


@dataclass(frozen=True)
class OptimizationOutcome:
    """Tuned configuration plus the search traces that produced it."""

    config: SegmenterConfig
    searches: Mapping[str, SearchResult]  # "global", or one entry per class
    objective_value: float
    n_evaluations: int


def _resolve_margins(
    frame_duration: float,
    margin: float,
    min_gap_frames: int | None,
    min_len_frames: int | None,
) -> tuple[int, int]:
    default = default_margin_frames(frame_duration, margin)
    gap = default if min_gap_frames is None else min_gap_frames
    length = default if min_len_frames is None else min_len_frames
    return gap, length


def _run_search(objective: Objective, space: ParameterSpace, mode: str) -> SearchResult:
    if mode == "grid":
        space = dataclasses.replace(space, steps=1)
    elif mode != "dicho":
        raise ConfigurationError(f"unknown search mode {mode!r}")
    return dichotomic_search(objective, space)


def optimize_class_independent(
    method: str,
    space: ParameterSpace,
    dataset: Sequence[ClipPrediction],
    annotations: AnnotationSet,
    mode: str = "dicho",
    onset_collar: float = DEFAULT_ONSET_COLLAR,
    offset_ratio: float = DEFAULT_OFFSET_RATIO,
    margin: float = 0.2,
    min_gap_frames: int | None = None,
    min_len_frames: int | None = None,
) -> OptimizationOutcome:
    """Tune one shared parameter set maximizing pipeline macro-F1.

    The objective runs the full pipeline (smooth, binarize, merge/prune,
    score with the given collars) on the dataset with the audio-tagging
    oracle derived from the annotations. Margins default to the 200 ms
    tolerance converted to frames.
    """
    if method not in ("cia", "cih", "cis"):
        raise ConfigurationError(
            f"expected a class-independent parametric method, got {method!r}"
        )
    _validate_space(method, space)
    gap, length = _resolve_margins(
        dataset[0].frame_duration if dataset else 1.0, margin, min_gap_frames, min_len_frames
    )
    evaluator = _PipelineEvaluator(
        dataset, annotations, onset_collar, offset_ratio, gap, length
    )

    def objective(raw: Mapping[str, float]) -> float:
        params = _effective_params(method, raw)
        if params is None:
            return -math.inf
        return evaluator.macro_f1(
            method, {name: params for name in evaluator.scored_classes}
        )

    result = _run_search(objective, space, mode)
    best = _effective_params(method, result.best_params)
    if best is None:
        raise ConfigurationError(
            "search found no feasible point (check the t_low/t_high bounds)"
        )
    config = SegmenterConfig(
        method=method, params=best, min_gap_frames=gap, min_len_frames=length
    )
    return OptimizationOutcome(
        config=config,
        searches={"global": result},
        objective_value=result.best_value,
        n_evaluations=result.n_evaluations,
    )


def optimize_class_dependent(
    method: str,
    space: ParameterSpace,
    dataset: Sequence[ClipPrediction],
    annotations: AnnotationSet,
    mode: str = "dicho",
    onset_collar: float = DEFAULT_ONSET_COLLAR,
    offset_ratio: float = DEFAULT_OFFSET_RATIO,
    margin: float = 0.2,
    min_gap_frames: int | None = None,
    min_len_frames: int | None = None,
) -> OptimizationOutcome:
    """Tune one parameter set per class, each maximizing that class's F1.

    Runs one search per class over the same space (so the evaluation
    count is exactly C times the class-independent one). Because classes
    share no parameters, per-class F1 maximization is exactly equivalent
    to joint macro-F1 maximization; the reported objective value is the
    mean best F1 over the classes with references, which a full rescore
    of the returned configuration reproduces.
    """
    if method not in ("cda", "cdh", "cds"):
        raise ConfigurationError(
            f"expected a class-dependent parametric method, got {method!r}"
        )
    _validate_space(method, space)
    gap, length = _resolve_margins(
        dataset[0].frame_duration if dataset else 1.0, margin, min_gap_frames, min_len_frames
    )
    evaluator = _PipelineEvaluator(
        dataset, annotations, onset_collar, offset_ratio, gap, length
    )

    searches: dict[str, SearchResult] = {}
    class_params: dict[str, dict[str, float]] = {}
    for name in evaluator.class_names:

        def objective(raw: Mapping[str, float], _name=name) -> float:
            params = _effective_params(method, raw)
            if params is None:
                return -math.inf
            return evaluator.class_f1(_name, method, params)

        result = _run_search(objective, space, mode)
        searches[name] = result
        best = _effective_params(method, result.best_params)
        if best is None:
            raise ConfigurationError(
                f"search found no feasible point for class {name!r}"
            )
        class_params[name] = best

    scored = evaluator.scored_classes
    if scored:
        objective_value = sum(searches[name].best_value for name in scored) / len(scored)
    else:
        objective_value = 0.0
    config = SegmenterConfig(
        method=method,
        class_params=class_params,
        min_gap_frames=gap,
        min_len_frames=length,
    )
    return OptimizationOutcome(
        config=config,
        searches=searches,
        objective_value=objective_value,
        n_evaluations=sum(r.n_evaluations for r in searches.values()),
    )
