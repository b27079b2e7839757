"""Reading probability matrices and annotations; writing event lists.

Formats
-------
Probability CSV (one file per clip, named ``<clip_id>.csv``): first line
holds the comma-separated class names, each following line one frame of
comma-separated probabilities in [0, 1]. UTF-8, decimal points, no
quoting. The frame duration is not stored in the file; it is supplied by
the caller (one fixed frame grid per corpus).

Annotation / submission TSV: one event per line as
``filename<TAB>onset<TAB>offset<TAB>event_label``, seconds with decimal
points, no header.

Weak-tag TSV: ``filename<TAB>label1,label2,...`` per clip, the label list
possibly empty.

Readers raise :class:`~sedpost.core.ParseError` naming the source and
line of the first malformed record; nothing is silently dropped.
"""

from __future__ import annotations

import io
import os
from pathlib import Path
from typing import IO, Iterable, Mapping

import numpy as np

from .core import AnnotationSet, ClipPrediction, Event, ParseError

__all__ = [
    "derive_weak_tags",
    "events_tsv_text",
    "read_annotations_tsv",
    "read_prediction_dir",
    "read_probability_csv",
    "read_weak_tags_tsv",
    "write_events_tsv",
    "write_probability_csv",
    "write_weak_tags_tsv",
]

WeakTags = dict[str, frozenset[str]]


def _open_source(source: str | os.PathLike | IO[str]):
    """Return (file object, source name, clip stem, needs_close)."""
    if isinstance(source, (str, os.PathLike)):
        path = Path(source)
        return open(path, "r", encoding="utf-8"), str(path), path.stem, True
    name = getattr(source, "name", None)
    stem = Path(name).stem if isinstance(name, str) else None
    return source, name if isinstance(name, str) else "<stream>", stem, False


def read_probability_csv(
    source: str | os.PathLike | IO[str],
    frame_duration: float,
    clip_id: str | None = None,
) -> ClipPrediction:
    """Parse one per-clip probability CSV into a ClipPrediction.

    The clip id defaults to the source file name without its extension;
    pass ``clip_id`` when reading from an anonymous stream.
    """
    stream, name, stem, needs_close = _open_source(source)
    try:
        if clip_id is None:
            clip_id = stem
        if clip_id is None:
            raise ValueError("clip_id required when the stream has no name")
        header = stream.readline()
        if not header.strip():
            raise ParseError("empty file or blank header", source=name, line=1)
        class_names = [c.strip() for c in header.rstrip("\n").split(",")]
        if any(not c for c in class_names):
            raise ParseError("empty class name in header", source=name, line=1)
        if len(set(class_names)) != len(class_names):
            raise ParseError("duplicate class names in header", source=name, line=1)
        n_classes = len(class_names)
        rows = []
        for lineno, line in enumerate(stream, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != n_classes:
                raise ParseError(
                    f"expected {n_classes} values, got {len(cells)}",
                    source=name,
                    line=lineno,
                )
            row = []
            for cell in cells:
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(
                        f"non-numeric value {cell.strip()!r}", source=name, line=lineno
                    ) from None
                if not 0.0 <= value <= 1.0:
                    raise ParseError(
                        f"value {value} outside [0, 1]", source=name, line=lineno
                    )
                row.append(value)
            rows.append(row)
        if not rows:
            raise ParseError("no probability rows", source=name, line=2)
        return ClipPrediction(
            clip_id=clip_id,
            probs=np.array(rows, dtype=np.float64),
            frame_duration=frame_duration,
            class_names=tuple(class_names),
        )
    finally:
        if needs_close:
            stream.close()


def write_probability_csv(pred: ClipPrediction, stream: IO[str], decimals: int = 6) -> None:
    """Inverse of read_probability_csv (probabilities rounded to ``decimals``)."""
    stream.write(",".join(pred.class_names) + "\n")
    fmt = f"%.{decimals}f"
    for row in pred.probs:
        stream.write(",".join(fmt % v for v in row) + "\n")


def read_prediction_dir(
    directory: str | os.PathLike, frame_duration: float
) -> list[ClipPrediction]:
    """Read every ``*.csv`` in a directory, sorted by clip id."""
    paths = sorted(Path(directory).glob("*.csv"))
    if not paths:
        raise FileNotFoundError(f"no .csv prediction files in {directory}")
    return [read_probability_csv(p, frame_duration) for p in paths]


def read_annotations_tsv(source: str | os.PathLike | IO[str]) -> AnnotationSet:
    """Parse strong annotations: filename, onset, offset, event_label.

    Clip lengths are not part of the format, so the returned set records
    them as unknown. The clip set is the set of distinct filenames.
    """
    stream, name, _, needs_close = _open_source(source)
    try:
        events = []
        clips: dict[str, float | None] = {}
        for lineno, line in enumerate(stream, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise ParseError(
                    f"expected 4 tab-separated fields, got {len(fields)}",
                    source=name,
                    line=lineno,
                )
            clip_id, onset_s, offset_s, label = fields
            if not clip_id or not label:
                raise ParseError("empty filename or event label", source=name, line=lineno)
            try:
                onset = float(onset_s)
                offset = float(offset_s)
            except ValueError:
                raise ParseError(
                    f"non-numeric time in {onset_s!r}/{offset_s!r}", source=name, line=lineno
                ) from None
            if onset < 0:
                raise ParseError(f"negative onset {onset}", source=name, line=lineno)
            if not onset < offset:
                raise ParseError(
                    f"onset {onset} not before offset {offset}", source=name, line=lineno
                )
            clips.setdefault(clip_id, None)
            events.append(Event(clip_id=clip_id, onset=onset, offset=offset, class_name=label))
        return AnnotationSet(events=tuple(events), clips=clips)
    finally:
        if needs_close:
            stream.close()


def write_events_tsv(
    events: Iterable[Event], stream: IO[str], decimals: int = 3
) -> None:
    """Write events in the annotation TSV schema.

    Lines are sorted by (clip_id, onset, class_name); times carry
    ``decimals`` digits (3 by default, the usual submission precision).
    """
    out = sorted(events, key=lambda ev: (ev.clip_id, ev.onset, ev.class_name))
    fmt = f"%.{decimals}f"
    for ev in out:
        stream.write(
            f"{ev.clip_id}\t{fmt % ev.onset}\t{fmt % ev.offset}\t{ev.class_name}\n"
        )


def events_tsv_text(events: Iterable[Event], decimals: int = 3) -> str:
    buf = io.StringIO()
    write_events_tsv(events, buf, decimals=decimals)
    return buf.getvalue()


def derive_weak_tags(annotations: AnnotationSet) -> WeakTags:
    """Clip-level tags from strong labels: the class set of each clip's events.

    Every annotated clip gets an entry, clips without events an empty set.
    Used as the audio-tagging oracle, standing in for a perfect clip-level
    classifier.
    """
    tags: dict[str, set[str]] = {clip: set() for clip in annotations.clips}
    for ev in annotations.events:
        tags[ev.clip_id].add(ev.class_name)
    return {clip: frozenset(names) for clip, names in tags.items()}


def read_weak_tags_tsv(source: str | os.PathLike | IO[str]) -> WeakTags:
    """Parse clip-level tags: filename, comma-separated labels (possibly none)."""
    stream, name, _, needs_close = _open_source(source)
    try:
        tags: dict[str, frozenset[str]] = {}
        for lineno, line in enumerate(stream, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ParseError(
                    f"expected 2 tab-separated fields, got {len(fields)}",
                    source=name,
                    line=lineno,
                )
            clip_id, labels = fields
            if not clip_id:
                raise ParseError("empty filename", source=name, line=lineno)
            if clip_id in tags:
                raise ParseError(f"duplicate clip {clip_id!r}", source=name, line=lineno)
            names = [c for c in labels.split(",") if c]
            tags[clip_id] = frozenset(names)
        return tags
    finally:
        if needs_close:
            stream.close()


def write_weak_tags_tsv(tags: Mapping[str, frozenset[str]], stream: IO[str]) -> None:
    """Inverse of read_weak_tags_tsv; clips sorted, labels sorted within a clip."""
    for clip_id in sorted(tags):
        stream.write(f"{clip_id}\t{','.join(sorted(tags[clip_id]))}\n")
