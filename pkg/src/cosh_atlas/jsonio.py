"""Canonical JSON: sorted keys, floats as 17 significant digits, LF ending.

Two equal documents always serialize to the same bytes, so hashes of them
are reproducible.
"""

from __future__ import annotations

import json
import math


def _encode(obj) -> str:
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(int(obj))
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite float {obj!r} has no JSON form")
        s = format(obj, ".17g")
        # keep floats recognisable as floats after a round trip
        if not any(c in s for c in ".en"):
            s += ".0"
        return s
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ",".join(json.dumps(str(k)) + ":" + _encode(v) for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_encode(v) for v in obj) + "]"
    if hasattr(obj, "item"):  # numpy scalars
        return _encode(obj.item())
    raise TypeError(f"cannot encode {type(obj).__name__}")


def canonical_dumps(obj) -> str:
    return _encode(obj) + "\n"


def canonical_bytes(obj) -> bytes:
    return canonical_dumps(obj).encode("ascii")
