"""Binary PPM rendering of a marked field and atomic file output."""

from __future__ import annotations

import os
import tempfile

import numpy as np

from .certifier import MarkedField
from .classifier import Status

# certified cells by delay k = 0..8 (larger delays share the last colour)
DELAY_RAMP = np.array(
    [
        (255, 255, 224),
        (255, 240, 150),
        (255, 214, 90),
        (252, 180, 50),
        (245, 140, 30),
        (230, 100, 25),
        (205, 65, 25),
        (170, 40, 30),
        (130, 25, 35),
    ],
    dtype=np.uint8,
)
# attracted cells by floor(log2(steps + 1)), capped at the last entry
ATTRACT_RAMP = np.array(
    [
        (200, 235, 255),
        (160, 210, 250),
        (120, 185, 240),
        (85, 155, 225),
        (60, 125, 205),
        (45, 95, 180),
        (35, 70, 150),
        (25, 50, 120),
        (15, 30, 90),
    ],
    dtype=np.uint8,
)
UNDETERMINED = np.array((0, 0, 0), dtype=np.uint8)


def field_rgb(field: MarkedField) -> np.ndarray:
    """``(res, res, 3)`` uint8 image, row 0 at the top (largest imaginary part)."""
    st = field.status
    img = np.zeros(st.shape + (3,), dtype=np.uint8)
    img[...] = UNDETERMINED
    fast = st == Status.FAST
    img[fast] = DELAY_RAMP[np.clip(field.delay[fast], 0, len(DELAY_RAMP) - 1)]
    att = st == Status.ATTRACTED
    if np.any(att):
        bucket = np.floor(np.log2(field.steps[att] + 1.0)).astype(np.int64)
        img[att] = ATTRACT_RAMP[np.clip(bucket, 0, len(ATTRACT_RAMP) - 1)]
    return img


def ppm_bytes(img: np.ndarray) -> bytes:
    h, w, _ = img.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(img, dtype=np.uint8).tobytes()


def atomic_write(path: str | os.PathLike, data: bytes) -> None:
    """Write ``data`` to a temporary file next to ``path`` and rename it over."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=d)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
