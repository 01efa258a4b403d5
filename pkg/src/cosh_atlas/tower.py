"""Non-negative magnitudes as normalized exponential towers.

A :class:`TowerReal` ``(m, r)`` stands for ``exp`` applied ``m`` times to ``r``.
Canonical mantissas live in ``[0, e)`` at height 0 and in ``[1, e)`` above it,
so the bands tile ``[0, inf)`` and the lexicographic order on ``(m, r)`` is the
numeric order of the represented values.

Besides the scalar class there are array versions of the hot operations
(``*_arr``) used by the batch orbit engine. They follow the scalar code path
operation for operation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

E = math.e
_R_TOP = math.nextafter(E, 0.0)
_LD = np.longdouble
_LD_E = np.exp(_LD(1))
_FLOAT_MAX = _LD(np.finfo(float).max)
_FLOAT_MAX_LOG = np.log(_FLOAT_MAX)  # ~709.78


@dataclass(frozen=True, order=True)
class TowerReal:
    m: int
    r: float

    def __post_init__(self):
        if self.m < 0 or not math.isfinite(self.r):
            raise ValueError(f"invalid tower ({self.m}, {self.r})")
        lo = 0.0 if self.m == 0 else 1.0
        if not (lo <= self.r < E):
            raise ValueError(f"non-canonical tower ({self.m}, {self.r})")

    def __repr__(self):
        return f"TowerReal({self.m}, {self.r!r})"

    def to_float(self) -> float:
        """Represented value as binary64, ``inf`` if it overflows."""
        v = _ld_value(self.m, self.r)
        return float(v) if v is not None else math.inf

    def log_value(self) -> float:
        """Natural log of the value as binary64 (``-inf`` for zero, ``inf`` on overflow)."""
        if self.m == 0:
            return math.log(self.r) if self.r > 0 else -math.inf
        return TowerReal(self.m - 1, self.r).to_float()


ZERO = TowerReal(0, 0.0)
ONE = TowerReal(0, 1.0)


# Exp/log chains run in extended precision and are rounded once at the end:
# at height 3 near 1e300 one ulp of r moves the value by ~8e3 ulps, so every
# intermediate binary64 rounding would show up in the result.


def _ld_value(m: int, r: float):
    """Value of ``(m, r)`` as a long double, ``None`` past binary64 range."""
    v = _LD(r)
    for _ in range(m):
        if v > _FLOAT_MAX_LOG:
            return None
        v = np.exp(v)
    return v if v <= _FLOAT_MAX else None


def _from_ld(v) -> TowerReal:
    """Canonical tower of a finite non-negative long double."""
    m = 0
    while v >= _LD_E:
        v = np.log(v)
        m += 1
    r = float(v)
    if m == 0:
        return TowerReal(0, min(r, _R_TOP))
    return TowerReal(m, min(max(r, 1.0), _R_TOP))


def from_real(x: float) -> TowerReal:
    """Canonical tower of a finite non-negative float."""
    if not math.isfinite(x) or x < 0:
        raise ValueError(f"from_real needs a finite non-negative value, got {x!r}")
    x = float(x)
    if x < E:
        return TowerReal(0, x)
    return _from_ld(_LD(x))


def compare(a: TowerReal, b: TowerReal) -> int:
    """-1, 0 or 1 as ``a`` is less than, equal to or greater than ``b``."""
    if a == b:
        return 0
    return -1 if a < b else 1


def exp_t(a: TowerReal) -> TowerReal:
    if a.m >= 1:
        return TowerReal(a.m + 1, a.r)
    if a.r >= 1.0:
        return TowerReal(1, a.r)
    return _from_ld(np.exp(_LD(a.r)))


def log_t(a: TowerReal) -> TowerReal:
    if a.m >= 1:
        return TowerReal(a.m - 1, a.r)
    if a.r < 1.0:
        raise ValueError(f"log_t needs a value >= 1, got {a.r!r}")
    return TowerReal(0, math.log(a.r))


def add_scalar(a: TowerReal, d: float) -> TowerReal:
    """Canonical form of ``value + d``, clamped at 0.

    Once the value leaves binary64 range (height >= 4 with a large mantissa,
    value > ~1.8e308) adding any float of moderate size is below mantissa
    resolution at every level, and ``a`` is returned unchanged.
    """
    v = _ld_value(a.m, a.r)
    if v is None:
        return a
    v = v + _LD(d)
    return _from_ld(v) if v > 0 else ZERO


def mul_scalar(a: TowerReal, c: float) -> TowerReal:
    """Canonical form of ``value * c`` for ``c > 0``.

    Works in the log domain: ``log(value * c) = log(value) + log(c)``. The
    addition saturates (returns ``a``) once ``log(value)`` itself is beyond
    binary64, i.e. for values above ``exp(1.8e308)``; below that it is exact
    to mantissa resolution.
    """
    if not (c > 0 and math.isfinite(c)):
        raise ValueError(f"mul_scalar needs a positive finite factor, got {c!r}")
    if a.m == 0:
        return _from_ld(_LD(a.r) * _LD(c))
    s = _ld_value(a.m - 1, a.r)
    if s is None:
        return a
    s = s + np.log(_LD(c))
    if s < 0:
        return _from_ld(np.exp(s))
    return exp_t(_from_ld(s))


def power(a: TowerReal, c: float) -> TowerReal:
    """``value ** c`` for ``value >= 1``, computed as ``exp(c * log(value))``."""
    return exp_t(mul_scalar(log_t(a), c))


def rate_functional(a: TowerReal, n: int) -> float:
    """``F^(-n)(value)`` for ``F(t) = exp(t) - 1``, i.e. ``log1p`` applied n times.

    While the running value is beyond binary64 range the step is a plain
    height decrement: the ``+1`` inside the log is far below resolution there.
    Returns ``inf`` only if ``n`` is too small to bring the value into range.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    cur = a
    k = 0
    while k < n:
        v = _ld_value(cur.m, cur.r)
        if v is not None:
            break
        cur = log_t(cur)
        k += 1
    else:
        return cur.to_float()
    for _ in range(n - k):
        v = np.log1p(v)
    return float(v)


# ---------------------------------------------------------------- arrays


def _from_ld_arr(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    v = np.array(v, dtype=_LD, copy=True)
    m = np.zeros(v.shape, dtype=np.int64)
    while True:
        sel = v >= _LD_E
        if not np.any(sel):
            break
        v[sel] = np.log(v[sel])
        m[sel] += 1
    r = v.astype(float)
    r = np.minimum(r, _R_TOP)
    up = m >= 1
    r[up] = np.maximum(r[up], 1.0)
    return m, r


def from_real_arr(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`from_real`; returns ``(m, r)`` arrays."""
    return _from_ld_arr(np.asarray(x, dtype=float))


def _ld_value_arr(m: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Long-double values, ``inf`` past binary64 range."""
    v = np.array(r, dtype=_LD, copy=True)
    m = np.asarray(m)
    for level in range(1, int(m.max(initial=0)) + 1):
        sel = (m >= level) & np.isfinite(v)
        big = sel & (v > _FLOAT_MAX_LOG)
        v[big] = np.inf
        go = sel & ~big
        v[go] = np.exp(v[go])
    v[v > _FLOAT_MAX] = np.inf
    return v


def to_float_arr(m: np.ndarray, r: np.ndarray) -> np.ndarray:
    return _ld_value_arr(m, r).astype(float)


def exp_arr(m: np.ndarray, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = np.asarray(m)
    r = np.asarray(r, dtype=float)
    out_m = np.where(m >= 1, m + 1, 0)
    out_r = r.copy()
    low = m == 0
    if np.any(low):
        lm, lr = _from_ld_arr(np.exp(r[low].astype(_LD)))
        # mantissas already in [1, e) stay exact under exp_t
        keep = r[low] >= 1.0
        out_m[low] = np.where(keep, 1, lm)
        out_r[low] = np.where(keep, r[low], lr)
    return out_m, out_r


def from_log_arr(L: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Tower of ``exp(L)`` for float log-magnitudes ``L`` (any sign)."""
    L = np.asarray(L, dtype=float)
    pos = L >= 0
    m, r = from_real_arr(np.where(pos, L, 0.0))
    em, er = exp_arr(m, r)
    sm, sr = from_real_arr(np.exp(np.minimum(L, 0.0)))
    return np.where(pos, em, sm), np.where(pos, er, sr)


def less_arr(am, ar, bm, br) -> np.ndarray:
    """Elementwise ``a < b`` in tower order."""
    return (am < bm) | ((am == bm) & (ar < br))
