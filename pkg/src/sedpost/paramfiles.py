"""Flat key-value files for segmenter configurations and search spaces.

Configuration file: one ``key = value`` pair per line, ``#`` comments and
blank lines ignored. Global parameters use the bare parameter name;
class-dependent values use a ``class.<name>.`` prefix (class names may
contain spaces and slashes). Example::

    method = cda
    min_gap_frames = 9
    min_len_frames = 9
    class.Speech.window = 9
    class.Speech.t = 0.5125

Space file: one searched parameter per line as ``name = lower upper kind``
with kind ``real`` or ``odd`` (odd-integer grid). Example::

    t = 0.0 1.0 real
    window = 1 31 odd

Floats are written with repr so the files round-trip exactly, which makes
optimization outputs diff-able.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import IO

from .core import ParameterRange, ParameterSpace, ParseError, SegmenterConfig

__all__ = [
    "read_config",
    "read_space",
    "write_config",
]

_KIND_ALIASES = {"real": "real", "odd": "odd-int", "odd-int": "odd-int"}


def _key_value_lines(source: str | os.PathLike | IO[str]):
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as stream:
            lines = stream.readlines()
        name = str(source)
    else:
        lines = source.readlines()
        name = getattr(source, "name", "<stream>")
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ParseError("expected 'key = value'", source=name, line=lineno)
        key, _, value = stripped.partition("=")
        yield name, lineno, key.strip(), value.strip()


def _parse_number(raw: str, name: str, lineno: int) -> float | int:
    try:
        as_float = float(raw)
    except ValueError:
        raise ParseError(f"non-numeric value {raw!r}", source=name, line=lineno) from None
    if as_float == int(as_float) and ("." not in raw and "e" not in raw.lower()):
        return int(as_float)
    return as_float


def read_config(
    source: str | os.PathLike | IO[str],
    method: str | None = None,
    min_gap_frames: int | None = None,
    min_len_frames: int | None = None,
) -> SegmenterConfig:
    """Parse a configuration file into a SegmenterConfig.

    ``method`` and the margins act as fallbacks when the file does not set
    them; a method given both here and in the file must agree.
    """
    params: dict[str, float] = {}
    class_params: dict[str, dict[str, float]] = {}
    file_method = None
    margins = {"min_gap_frames": min_gap_frames, "min_len_frames": min_len_frames}
    for name, lineno, key, value in _key_value_lines(source):
        if key == "method":
            file_method = value
        elif key in margins:
            margins[key] = int(_parse_number(value, name, lineno))
        elif key.startswith("class."):
            rest = key[len("class."):]
            class_name, dot, param = rest.rpartition(".")
            if not dot or not class_name or not param:
                raise ParseError(
                    f"expected 'class.<name>.<param>', got {key!r}", source=name, line=lineno
                )
            class_params.setdefault(class_name, {})[param] = _parse_number(value, name, lineno)
        else:
            params[key] = _parse_number(value, name, lineno)

    if file_method is not None and method is not None and file_method != method:
        raise ParseError(
            f"config file sets method {file_method!r} but {method!r} was requested",
            source=getattr(source, "name", str(source)),
        )
    chosen = file_method or method
    if chosen is None:
        raise ParseError(
            "no method given (neither in the file nor by the caller)",
            source=getattr(source, "name", str(source)),
        )
    gap = margins["min_gap_frames"]
    length = margins["min_len_frames"]
    return SegmenterConfig(
        method=chosen,
        params=params,
        class_params=class_params or None,
        min_gap_frames=0 if gap is None else gap,
        min_len_frames=0 if length is None else length,
    )


def _format_number(value: float) -> str:
    if isinstance(value, bool):
        raise TypeError("booleans are not config values")
    if isinstance(value, int) or float(value) == int(value):
        return str(int(value))
    return repr(float(value))


def write_config(config: SegmenterConfig, stream: IO[str]) -> None:
    """Inverse of read_config; keys sorted for diff-ability."""
    stream.write(f"method = {config.method}\n")
    stream.write(f"min_gap_frames = {config.min_gap_frames}\n")
    stream.write(f"min_len_frames = {config.min_len_frames}\n")
    for key in sorted(config.params):
        stream.write(f"{key} = {_format_number(config.params[key])}\n")
    if config.class_params:
        for class_name in sorted(config.class_params):
            for key in sorted(config.class_params[class_name]):
                value = config.class_params[class_name][key]
                stream.write(f"class.{class_name}.{key} = {_format_number(value)}\n")


def read_space(
    source: str | os.PathLike | IO[str], points_per_dim: int = 9, steps: int = 4
) -> ParameterSpace:
    """Parse a space file into a ParameterSpace."""
    ranges = []
    for name, lineno, key, value in _key_value_lines(source):
        fields = value.split()
        if len(fields) != 3:
            raise ParseError(
                f"expected 'lower upper kind', got {value!r}", source=name, line=lineno
            )
        lower = _parse_number(fields[0], name, lineno)
        upper = _parse_number(fields[1], name, lineno)
        kind = _KIND_ALIASES.get(fields[2])
        if kind is None:
            raise ParseError(
                f"unknown kind {fields[2]!r} (use real or odd)", source=name, line=lineno
            )
        ranges.append(ParameterRange(name=key, lower=lower, upper=upper, kind=kind))
    if not ranges:
        raise ParseError("empty space file", source=getattr(source, "name", str(source)))
    return ParameterSpace(
        parameters=tuple(ranges), points_per_dim=points_per_dim, steps=steps
    )
