"""Deterministic synthetic corpus generator.

Produces ground-truth annotations together with matching noisy probability
matrices, so the whole pipeline (segmentation, scoring, optimization) can
be verified end to end without a trained model. Each class curve is a
boxcar: a low baseline outside events, a high level inside, plus Gaussian
noise and a light render-time smoothing; the analytically optimal absolute
threshold is therefore known ((inside + outside) / 2), which turns
optimizer tests into oracle comparisons.

Randomness comes from numpy's PCG64 generator. Each clip draws from its
own stream, seeded by ``SeedSequence((seed, clip_index))``, so clips are
independent of one another, of the clip count, and of generation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DCASE_CLASSES,
    DEFAULT_FRAME_COUNT,
    DEFAULT_FRAME_DURATION,
    AnnotationSet,
    ClipPrediction,
    Event,
)
from .kernels import moving_average

__all__ = ["SynthSpec", "generate"]

_MAX_CLIP_RETRIES = 100


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic corpus.

    Events per clip are uniform integers in [0, max_events]; each event
    draws a uniform class, a uniform duration in [min_duration,
    max_duration] seconds and a uniform feasible onset. Events of the same
    class in a clip must be at least ``min_same_class_gap`` seconds apart
    (so the standard merge margin cannot fuse distinct ground-truth
    events); events of different classes may overlap freely. Ground-truth
    times are quantized to the frame grid (onset floor, offset ceil) so
    the rendered boxcars line up exactly with the annotations.
    """

    seed: int = 0
    n_clips: int = 100
    class_names: tuple[str, ...] = DCASE_CLASSES
    max_events: int = 3
    min_duration: float = 0.5
    max_duration: float = 3.0
    min_same_class_gap: float = 0.5
    inside_prob: float = 0.9
    outside_prob: float = 0.1
    noise_sigma: float = 0.05
    render_window: int = 5
    n_frames: int = DEFAULT_FRAME_COUNT
    frame_duration: float = DEFAULT_FRAME_DURATION
    clip_prefix: str = "synth"

    def __post_init__(self):
        if self.n_clips < 0:
            raise ValueError(f"n_clips must be >= 0, got {self.n_clips}")
        if not self.class_names:
            raise ValueError("class list is empty")
        if not 0.0 <= self.outside_prob < self.inside_prob <= 1.0:
            raise ValueError(
                f"need 0 <= outside_prob < inside_prob <= 1, got "
                f"{self.outside_prob}, {self.inside_prob}"
            )
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.render_window < 1 or self.render_window % 2 == 0:
            raise ValueError(f"render_window must be an odd integer >= 1, got {self.render_window}")
        if self.max_events < 0:
            raise ValueError(f"max_events must be >= 0, got {self.max_events}")
        if self.min_duration < 2 * self.frame_duration:
            raise ValueError(
                f"min_duration must be at least two frames "
                f"({2 * self.frame_duration:.4f} s), got {self.min_duration}"
            )
        if self.min_duration > self.max_duration:
            raise ValueError("min_duration exceeds max_duration")
        if self.max_duration > self.clip_length:
            raise ValueError("max_duration exceeds the clip length")

    @property
    def clip_length(self) -> float:
        return self.n_frames * self.frame_duration

    def clip_id(self, index: int) -> str:
        return f"{self.clip_prefix}_{index:04d}"


def _draw_clip_events(spec: SynthSpec, rng: np.random.Generator, clip_id: str) -> list[Event]:
    """Events of one clip as frame-quantized (onset, offset) times."""
    # at least two frames between same-class events, else frame
    # quantization (onset floor, offset ceil) could make them overlap
    gap = max(spec.min_same_class_gap, 2 * spec.frame_duration)
    for _ in range(_MAX_CLIP_RETRIES):
        n_events = int(rng.integers(0, spec.max_events + 1))
        placed: list[tuple[int, float, float]] = []  # (class index, onset, offset)
        ok = True
        for _ in range(n_events):
            c = int(rng.integers(0, len(spec.class_names)))
            duration = float(rng.uniform(spec.min_duration, spec.max_duration))
            onset = float(rng.uniform(0.0, spec.clip_length - duration))
            offset = onset + duration
            conflict = any(
                pc == c and onset < p_off + gap and p_on - gap < offset
                for pc, p_on, p_off in placed
            )
            if conflict:
                ok = False
                break
            placed.append((c, onset, offset))
        if not ok:
            continue
        events = []
        for c, onset, offset in placed:
            start = int(np.floor(onset / spec.frame_duration))
            end = int(np.ceil(offset / spec.frame_duration))
            end = min(end, spec.n_frames)
            events.append(
                Event(
                    clip_id=clip_id,
                    onset=start * spec.frame_duration,
                    offset=end * spec.frame_duration,
                    class_name=spec.class_names[c],
                )
            )
        events.sort(key=lambda ev: (ev.onset, ev.class_name))
        return events
    raise RuntimeError(
        f"could not place events for {clip_id} after {_MAX_CLIP_RETRIES} attempts; "
        "loosen the duration/gap settings"
    )


def _render_clip(spec: SynthSpec, rng: np.random.Generator, events: list[Event],
                 clip_id: str) -> ClipPrediction:
    probs = np.full((spec.n_frames, len(spec.class_names)), spec.outside_prob)
    name_to_col = {name: c for c, name in enumerate(spec.class_names)}
    for ev in events:
        start = int(round(ev.onset / spec.frame_duration))
        end = int(round(ev.offset / spec.frame_duration))
        probs[start:end, name_to_col[ev.class_name]] = spec.inside_prob
    if spec.noise_sigma > 0:
        probs += rng.normal(0.0, spec.noise_sigma, size=probs.shape)
    if spec.render_window > 1:
        for c in range(probs.shape[1]):
            probs[:, c] = moving_average(probs[:, c], spec.render_window)
    np.clip(probs, 0.0, 1.0, out=probs)
    return ClipPrediction(
        clip_id=clip_id,
        probs=probs,
        frame_duration=spec.frame_duration,
        class_names=spec.class_names,
    )


def generate(spec: SynthSpec) -> tuple[AnnotationSet, list[ClipPrediction]]:
    """Generate the corpus: (ground-truth annotations, probability matrices).

    Bit-identical for a given spec, on any platform.
    """
    all_events: list[Event] = []
    clips: dict[str, float] = {}
    preds: list[ClipPrediction] = []
    for i in range(spec.n_clips):
        clip_id = spec.clip_id(i)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((spec.seed, i))))
        events = _draw_clip_events(spec, rng, clip_id)
        preds.append(_render_clip(spec, rng, events, clip_id))
        all_events.extend(events)
        clips[clip_id] = spec.clip_length
    annotations = AnnotationSet(events=tuple(all_events), clips=clips)
    return annotations, preds
