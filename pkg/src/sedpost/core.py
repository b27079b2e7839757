"""Domain types and frame/time conversions shared across the toolkit.

The computation domain is the frame grid of the localizer output: a clip is
a ``T x C`` probability matrix with a fixed frame duration. Event times are
seconds; frame indices are what the segmentation algorithms operate on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

__all__ = [
    "AnnotationSet",
    "ClipPrediction",
    "ConfigurationError",
    "DEFAULT_FRAME_COUNT",
    "DEFAULT_FRAME_DURATION",
    "DCASE_CLASSES",
    "Event",
    "METHODS",
    "ParameterError",
    "ParameterRange",
    "ParameterSpace",
    "ParseError",
    "ScoreReport",
    "Segment",
    "SegmenterConfig",
    "default_margin_frames",
    "frames_to_seconds",
    "is_class_dependent",
    "is_parametric",
    "required_params",
    "seconds_to_frames",
]

# Frame grid of the models this toolkit was first used with: 431 frames
# over a 10 s clip. Everything is parameterized, these are only defaults.
DEFAULT_FRAME_COUNT = 431
DEFAULT_FRAME_DURATION = 10.0 / 431.0

# Domestic sound event classes of the target corpus, in canonical order.
DCASE_CLASSES = (
    "Speech",
    "Dog",
    "Cat",
    "Alarm/ Bell ringing",
    "Dishes",
    "Frying",
    "Blender",
    "Running water",
    "Vacuum cleaner",
    "Electric shaver/toothbrush",
)


class ParameterError(ValueError):
    """An algorithm parameter is out of its valid range."""


class ConfigurationError(ValueError):
    """A segmenter/optimizer configuration is incomplete or inconsistent."""


class ParseError(ValueError):
    """An input file is malformed; message carries source name and line."""

    def __init__(self, message: str, source: str | None = None, line: int | None = None):
        self.source = source
        self.line = line
        prefix = ""
        if source is not None:
            prefix += f"{source}: "
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)


# ---------------------------------------------------------------------------
# frame/time conversions
# ---------------------------------------------------------------------------

def frames_to_seconds(frame: int, frame_duration: float) -> float:
    """Convert a frame index to seconds (``frame * frame_duration``)."""
    if frame < 0:
        raise ValueError(f"frame must be >= 0, got {frame}")
    return frame * frame_duration


def seconds_to_frames(t: float, frame_duration: float) -> int:
    """Convert a time in seconds to the frame index containing it (floor)."""
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    return int(math.floor(t / frame_duration))


def default_margin_frames(frame_duration: float, margin: float = 0.2) -> int:
    """Number of frames covering ``margin`` seconds, rounded up.

    Used for the merge/prune tolerance margin (200 ms by default). Rounding
    up is conservative: a gap the scoring collar would resolve is never
    merged away. Quotients within 1e-9 of an integer count as exact so that
    a margin that is a true multiple of the frame duration is not rounded
    past it by floating-point noise.
    """
    if frame_duration <= 0:
        raise ValueError(f"frame_duration must be > 0, got {frame_duration}")
    if margin < 0:
        raise ValueError(f"margin must be >= 0, got {margin}")
    q = margin / frame_duration
    nearest = round(q)
    if abs(q - nearest) <= 1e-9 * max(1.0, abs(q)):
        return int(nearest)
    return int(math.ceil(q))


# ---------------------------------------------------------------------------
# prediction and annotation containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClipPrediction:
    """Per-clip localizer output: a ``T x C`` matrix of class probabilities.

    Parameters
    ----------
    clip_id : str
        Identifier of the clip (source file name without extension).
    probs : ndarray, shape (T, C)
        Frame-level class probabilities, all values in [0, 1].
    frame_duration : float
        Duration of one frame in seconds; ``T * frame_duration`` is the
        clip length.
    class_names : tuple of str
        Column labels, no duplicates.

    The matrix is stored as a read-only float64 array; instances are
    immutable and safe to share between threads.
    """

    clip_id: str
    probs: np.ndarray
    frame_duration: float
    class_names: tuple[str, ...]

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 2:
            raise ValueError(f"probs must be 2-D, got shape {probs.shape}")
        t, c = probs.shape
        if t < 1 or c < 1:
            raise ValueError(f"probs must be at least 1x1, got shape {probs.shape}")
        if np.isnan(probs).any():
            raise ValueError("probs contains NaN")
        if probs.min() < 0.0 or probs.max() > 1.0:
            raise ValueError("probs contains values outside [0, 1]")
        if self.frame_duration <= 0:
            raise ValueError(f"frame_duration must be > 0, got {self.frame_duration}")
        names = tuple(self.class_names)
        if len(names) != c:
            raise ValueError(f"{len(names)} class names for {c} columns")
        if len(set(names)) != len(names):
            raise ValueError("duplicate class names")
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "class_names", names)

    @property
    def n_frames(self) -> int:
        return self.probs.shape[0]

    @property
    def n_classes(self) -> int:
        return self.probs.shape[1]

    @property
    def clip_length(self) -> float:
        """Clip length in seconds."""
        return self.n_frames * self.frame_duration

    def class_index(self, class_name: str) -> int:
        try:
            return self.class_names.index(class_name)
        except ValueError:
            raise KeyError(f"unknown class {class_name!r}") from None

    def curve(self, class_name: str) -> np.ndarray:
        """Probability curve of one class (read-only view, length T)."""
        return self.probs[:, self.class_index(class_name)]


@dataclass(frozen=True, order=True)
class Event:
    """A timed sound event: (clip, class, onset seconds, offset seconds)."""

    clip_id: str
    onset: float
    offset: float
    class_name: str

    def __post_init__(self):
        if self.onset < 0:
            raise ValueError(f"onset must be >= 0, got {self.onset}")
        if not self.onset < self.offset:
            raise ValueError(f"onset must precede offset, got [{self.onset}, {self.offset}]")

    @property
    def length(self) -> float:
        return self.offset - self.onset


@dataclass(frozen=True)
class AnnotationSet:
    """Strong labels: events plus the set of annotated clips.

    ``clips`` maps clip_id to the clip length in seconds, or None when the
    length is unknown (the annotation format does not carry it). Every
    event's clip must be present in ``clips``; clips without events are
    allowed and matter for scoring and for weak-tag derivation.
    """

    events: tuple[Event, ...]
    clips: Mapping[str, float | None]

    def __post_init__(self):
        events = tuple(self.events)
        clips = dict(self.clips)
        for ev in events:
            if ev.clip_id not in clips:
                raise ValueError(f"event references unknown clip {ev.clip_id!r}")
            length = clips[ev.clip_id]
            if length is not None and ev.offset > length + 1e-9:
                raise ValueError(
                    f"event [{ev.onset}, {ev.offset}] exceeds clip {ev.clip_id!r}"
                    f" length {length}"
                )
        object.__setattr__(self, "events", events)
        object.__setattr__(self, "clips", clips)

    @property
    def class_names(self) -> tuple[str, ...]:
        """Distinct event classes, sorted."""
        return tuple(sorted({ev.class_name for ev in self.events}))

    def events_for(self, clip_id: str) -> tuple[Event, ...]:
        return tuple(ev for ev in self.events if ev.clip_id == clip_id)


@dataclass(frozen=True)
class Segment:
    """Half-open frame-domain run [start_frame, end_frame) of one class."""

    class_index: int
    start_frame: int
    end_frame: int

    def __post_init__(self):
        if self.start_frame < 0:
            raise ValueError(f"start_frame must be >= 0, got {self.start_frame}")
        if not self.start_frame < self.end_frame:
            raise ValueError(
                f"start_frame must precede end_frame, got [{self.start_frame}, {self.end_frame})"
            )

    @property
    def length(self) -> int:
        return self.end_frame - self.start_frame


# ---------------------------------------------------------------------------
# segmenter configuration
# ---------------------------------------------------------------------------

# method id -> parameter names (beyond the smoothing window)
_METHOD_THRESHOLD_PARAMS = {
    "cidwa": (),
    "cddwa": (),
    "cia": ("t",),
    "cda": ("t",),
    "cih": ("t_high", "t_low"),
    "cdh": ("t_high", "t_low"),
    "cis": ("k", "rise", "fall", "plateau_eps", "plateau_len"),
    "cds": ("k", "rise", "fall", "plateau_eps", "plateau_len"),
}

METHODS = tuple(_METHOD_THRESHOLD_PARAMS)

_STATISTIC_METHODS = ("cidwa", "cddwa")
_CLASS_DEPENDENT_METHODS = ("cddwa", "cda", "cdh", "cds")


def is_parametric(method: str) -> bool:
    """True for the methods that take tuned parameters (not the data-wise averages)."""
    return method in METHODS and method not in _STATISTIC_METHODS


def is_class_dependent(method: str) -> bool:
    return method in _CLASS_DEPENDENT_METHODS


def required_params(method: str) -> tuple[str, ...]:
    """Parameter names a method needs, smoothing window included."""
    if method not in METHODS:
        raise ConfigurationError(f"unknown method {method!r}")
    thresh = _METHOD_THRESHOLD_PARAMS[method]
    if not thresh:
        return ()
    return ("window",) + thresh


def _check_params(method: str, params: Mapping[str, float], where: str) -> dict[str, float]:
    needed = required_params(method)
    missing = [name for name in needed if name not in params]
    if missing:
        raise ConfigurationError(f"{where}: missing parameters {missing} for method {method!r}")
    out: dict[str, float] = {}
    for name in needed:
        out[name] = params[name]

    def bad(msg):
        return ParameterError(f"{where}: {msg}")

    if "window" in out:
        w = out["window"]
        if int(w) != w or int(w) < 1 or int(w) % 2 == 0:
            raise bad(f"window must be an odd integer >= 1, got {w}")
        out["window"] = int(w)
    if "t" in out and not 0.0 <= out["t"] <= 1.0:
        raise bad(f"t must be in [0, 1], got {out['t']}")
    if "t_high" in out:
        if not 0.0 <= out["t_low"] <= out["t_high"] <= 1.0:
            raise bad(
                f"need 0 <= t_low <= t_high <= 1, got t_low={out['t_low']} t_high={out['t_high']}"
            )
    if "k" in out:
        k = out["k"]
        if int(k) != k or int(k) < 1:
            raise bad(f"k must be an integer >= 1, got {k}")
        out["k"] = int(k)
        if out["rise"] < 0 or out["fall"] < 0:
            raise bad(f"rise and fall must be >= 0, got {out['rise']}, {out['fall']}")
        if out["plateau_eps"] < 0:
            raise bad(f"plateau_eps must be >= 0, got {out['plateau_eps']}")
        pl = out["plateau_len"]
        if int(pl) != pl or int(pl) < 1:
            raise bad(f"plateau_len must be an integer >= 1, got {pl}")
        out["plateau_len"] = int(pl)
    return out


@dataclass(frozen=True)
class SegmenterConfig:
    """Segmentation method plus its parameters and merge/prune margins.

    ``params`` holds the global parameter set for class-independent
    methods; ``class_params`` holds one set per class name for the
    class-dependent ones (coverage of the clip's full class list is
    checked at segmentation time). The data-wise average methods take
    no parameters. Margins are frame counts; 0 disables a pass. The
    standard pipeline sets both from the 200 ms tolerance margin via
    :func:`default_margin_frames`.
    """

    method: str
    params: Mapping[str, float] = field(default_factory=dict)
    class_params: Mapping[str, Mapping[str, float]] | None = None
    min_gap_frames: int = 0
    min_len_frames: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}")
        if self.min_gap_frames < 0 or self.min_len_frames < 0:
            raise ParameterError("margins must be >= 0")
        if is_class_dependent(self.method) and is_parametric(self.method):
            if not self.class_params:
                raise ConfigurationError(
                    f"method {self.method!r} needs per-class parameters"
                )
            checked = {
                name: _check_params(self.method, p, f"class {name!r}")
                for name, p in self.class_params.items()
            }
            object.__setattr__(self, "class_params", checked)
            object.__setattr__(self, "params", dict(self.params))
        elif is_parametric(self.method):
            if self.class_params:
                raise ConfigurationError(
                    f"method {self.method!r} is class-independent, got per-class parameters"
                )
            object.__setattr__(self, "params", _check_params(self.method, self.params, "params"))
        else:
            # data-wise averages: thresholds come from dataset statistics
            if self.params or self.class_params:
                raise ConfigurationError(
                    f"method {self.method!r} takes no parameters"
                )
            object.__setattr__(self, "params", {})

    def params_for(self, class_name: str) -> Mapping[str, float]:
        """Parameter set to use for one class."""
        if is_class_dependent(self.method) and is_parametric(self.method):
            try:
                return self.class_params[class_name]
            except KeyError:
                raise ConfigurationError(
                    f"no parameters configured for class {class_name!r}"
                ) from None
        return self.params


# ---------------------------------------------------------------------------
# scoring report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScoreReport:
    """Event-based scores: per-class counts and F1, macro-F1, error rate."""

    counts: Mapping[str, tuple[int, int, int]]  # class -> (tp, fp, fn)
    per_class_f1: Mapping[str, float]
    macro_f1: float
    error_rate: float

    def __post_init__(self):
        object.__setattr__(self, "counts", dict(self.counts))
        object.__setattr__(self, "per_class_f1", dict(self.per_class_f1))


# ---------------------------------------------------------------------------
# optimizer parameter space
# ---------------------------------------------------------------------------

_PARAM_KINDS = ("real", "odd-int")


@dataclass(frozen=True)
class ParameterRange:
    """Bounds of one searched parameter.

    ``kind`` is "real" or "odd-int"; odd-int grids snap values to the
    nearest odd integer inside the bounds. Equal bounds freeze the
    dimension at that value.
    """

    name: str
    lower: float
    upper: float
    kind: str = "real"

    def __post_init__(self):
        if self.kind not in _PARAM_KINDS:
            raise ParameterError(f"unknown parameter kind {self.kind!r}")
        if self.lower > self.upper:
            raise ParameterError(
                f"{self.name}: lower bound {self.lower} exceeds upper bound {self.upper}"
            )
        if self.kind == "odd-int" and self._first_odd_at_least(self.lower) > self.upper:
            raise ParameterError(
                f"{self.name}: no odd integer inside [{self.lower}, {self.upper}]"
            )

    @staticmethod
    def _first_odd_at_least(x: float) -> int:
        n = int(math.ceil(x))
        return n if n % 2 == 1 else n + 1


@dataclass(frozen=True)
class ParameterSpace:
    """Named parameter bounds plus grid resolution and refinement depth."""

    parameters: tuple[ParameterRange, ...]
    points_per_dim: int = 9
    steps: int = 4

    def __post_init__(self):
        params = tuple(self.parameters)
        if not params:
            raise ParameterError("parameter space is empty")
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise ParameterError(f"duplicate parameter names in {names}")
        if self.points_per_dim < 2:
            raise ParameterError(f"points_per_dim must be >= 2, got {self.points_per_dim}")
        if self.steps < 1:
            raise ParameterError(f"steps must be >= 1, got {self.steps}")
        object.__setattr__(self, "parameters", params)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parameters)
