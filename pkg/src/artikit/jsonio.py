"""Small JSON helpers shared by the file formats.

Floats are written with Python's shortest round-trip repr, so a value survives
save -> load bit-exactly; NaN is represented as null (JSON has no NaN).
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .errors import TrackFileError


def load_json(path) -> object:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise TrackFileError(f"{path}: cannot read: {e}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise TrackFileError(f"{path}: malformed JSON at line {e.lineno} column {e.colno}: {e.msg}") from e


def dump_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, allow_nan=False) + "\n")


def floats_or_null(values) -> list:
    """List of floats with NaN mapped to null."""
    return [None if math.isnan(v) else float(v) for v in values]


def points_or_null(array) -> list:
    """Rows of a float array, any non-finite row mapped to null."""
    out = []
    for row in array:
        if all(math.isfinite(x) for x in row):
            out.append([float(x) for x in row])
        else:
            out.append(None)
    return out
