"""The family ``f(z) = lam * cosh(z)**q`` and orbit iteration past float range.

Orbit points move through regimes as they grow:

* :class:`Exact` - a binary64 complex number, while ``|z| <= R_SWITCH``.
* :class:`LogPolar` - log-modulus and argument, used once the modulus is too
  large to iterate directly but the argument is still known to ``THETA_TOL``.
* :class:`MagnitudeOnly` - a tower modulus whose argument is lost. Its own
  modulus is still a proven value; stepping it needs the cone assumption
  (``tower_heuristic``) or yields :class:`Poisoned`.
* :class:`RealAxis` - sign and tower modulus on the real line, which the
  family maps into itself for real ``lam``. No ceiling.

The argument horizon is a hard limit of fixed precision: for ``|z| > ~4.5e12``
one ulp of ``Im z`` already exceeds ``THETA_TOL`` radians.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Union

from .tower import TowerReal, add_scalar, exp_t, from_real, mul_scalar

R_SWITCH = 1e12
A_MAX = 1e12
L_MAX = 700.0
THETA_TOL = 1e-3
EPS_MACH = 2.0**-52
EPS_CONE = 0.1
LOG2 = math.log(2.0)


class ScheduleError(ValueError):
    """The base radius does not give an increasing max-modulus schedule."""


@dataclass(frozen=True)
class FunctionSpec:
    lam: complex = 1.0
    q: int = 1

    def __post_init__(self):
        if self.lam == 0:
            raise ValueError("lambda must be non-zero")
        if self.q not in (1, 2):
            raise ValueError(f"q must be 1 or 2, got {self.q}")
        object.__setattr__(self, "lam", complex(self.lam))

    @property
    def real_lambda(self) -> bool:
        return self.lam.imag == 0.0

    @property
    def abs_lam(self) -> float:
        return abs(self.lam)

    def describe(self) -> dict:
        return {"lambda": [self.lam.real, self.lam.imag], "q": self.q}


PRESETS = {
    "h": FunctionSpec(1.0, 1),
    "g": FunctionSpec(0.5, 1),
    "cosh2": FunctionSpec(1.0, 2),
}
DEFAULT_RADIUS = {"h": 1.0, "g": 3.0, "cosh2": 1.0}


def evaluate(f: FunctionSpec, z: complex) -> complex:
    """``lam * cosh(z)**q`` in binary64; refuses the overflow regime."""
    z = complex(z)
    if abs(z.real) > 700:
        raise OverflowError("|Re z| > 700: use step() for large orbits")
    c = cmath.cosh(z)
    return f.lam * (c if f.q == 1 else c * c)


def derivative(f: FunctionSpec, z: complex) -> complex:
    z = complex(z)
    c = cmath.cosh(z)
    return f.lam * f.q * (c if f.q == 2 else 1.0) * cmath.sinh(z)


def joukowski(z: complex) -> complex:
    """cosh written as ``w -> (w + 1/w)/2`` after ``exp``."""
    w = cmath.exp(complex(z))
    return (w + 1.0 / w) / 2.0


# ---------------------------------------------------------------- regimes


@dataclass(frozen=True)
class Exact:
    z: complex


@dataclass(frozen=True)
class LogPolar:
    L: float
    theta: float
    arg_trusted: bool = True
    arg_error: float = 0.0


@dataclass(frozen=True)
class MagnitudeOnly:
    mag: TowerReal


@dataclass(frozen=True)
class RealAxis:
    sign: int
    mag: TowerReal


@dataclass(frozen=True)
class Poisoned:
    reason: str = "precision"


OrbitPoint = Union[Exact, LogPolar, MagnitudeOnly, RealAxis, Poisoned]


def magnitude(p: OrbitPoint) -> TowerReal | None:
    """Modulus of an orbit point as a tower, ``None`` if it is unknown."""
    if isinstance(p, Exact):
        return from_real(abs(p.z))
    if isinstance(p, LogPolar):
        return exp_t(from_real(p.L))
    if isinstance(p, (MagnitudeOnly, RealAxis)):
        return p.mag
    return None


def _wrap(theta: float) -> float:
    t = math.remainder(theta, 2 * math.pi)
    return math.pi if t == -math.pi else t


def real_mag_step(f: FunctionSpec, mag: TowerReal) -> TowerReal:
    """Tower of ``|lam| * cosh(x)**q`` for real ``x`` with ``|x| = mag``.

    Shared by real-axis orbits and the max-modulus schedule so that an orbit
    of ``R`` reproduces the schedule bit for bit.
    """
    x = mag.to_float()
    if x <= 350.0:
        return from_real(f.abs_lam * math.cosh(x) ** f.q)
    if math.isfinite(x):
        logv = math.log(f.abs_lam) + f.q * (x - LOG2)
        return exp_t(from_real(logv)) if logv >= 0 else from_real(math.exp(logv))
    t = mul_scalar(mag, float(f.q))
    t = add_scalar(t, math.log(f.abs_lam) - f.q * LOG2)
    return exp_t(t)


def _real_image_sign(f: FunctionSpec, base_sign: int) -> int:
    s = 1 if f.lam.real > 0 else -1
    return s * (base_sign**f.q)


def _symmetry_image(f: FunctionSpec, z: complex) -> OrbitPoint | None:
    """Image of ``z`` when a symmetry line makes it exactly real.

    Whitelist: ``Im z == 0``, ``Re z == 0`` (image ``lam * cos(y)**q``), and
    ``Im z`` equal to the binary64 value of ``k*pi``. No tolerance.
    """
    if not f.real_lambda:
        return None
    x, y = z.real, z.imag
    base = None
    if y == 0.0:
        base = 1
    elif x == 0.0:
        w = f.lam.real * math.cos(y) ** f.q
        return Exact(complex(w, 0.0))
    else:
        k = round(y / math.pi)
        if k != 0 and y == k * math.pi:
            base = -1 if k % 2 else 1
    if base is None:
        return None
    sign = _real_image_sign(f, base)
    if abs(x) <= 350.0:
        w = f.abs_lam * math.cosh(x) ** f.q
        if w <= R_SWITCH:
            return Exact(complex(sign * w, 0.0))
    return RealAxis(sign, real_mag_step(f, from_real(abs(x))))


def _complex_step(f: FunctionSpec, x: float, y: float, err: float) -> OrbitPoint:
    """Step from a point known as ``x + iy`` with absolute component error ``err``."""
    q = f.q
    if q * abs(x) <= 700.0:
        c = cmath.cosh(complex(x, y))
        w = f.lam * (c if q == 1 else c * c)
        aw = abs(w)
        if aw <= R_SWITCH:
            return Exact(w)
        L, theta = math.log(aw), cmath.phase(w)
    else:
        L = math.log(f.abs_lam) + q * (abs(x) - LOG2)
        theta = _wrap(q * math.copysign(1.0, x) * y + cmath.phase(f.lam))
    arg_err = q * (err + 2 * EPS_MACH * max(1.0, abs(y)))
    if L > L_MAX:
        return MagnitudeOnly(exp_t(from_real(L)))
    return LogPolar(L, theta, arg_err <= THETA_TOL, arg_err)


def _cone_step(f: FunctionSpec, mag: TowerReal) -> MagnitudeOnly:
    # |Re z| >= EPS_CONE * |z| assumed, so log|f| >= q*(EPS_CONE*|z| - log 2) + log|lam|
    t = mul_scalar(mag, f.q * EPS_CONE)
    t = add_scalar(t, math.log(f.abs_lam) - f.q * LOG2)
    return MagnitudeOnly(exp_t(t))


def step(f: FunctionSpec, p: OrbitPoint, heuristic: bool = False) -> OrbitPoint:
    """Advance one orbit point by ``f``.

    Degradation is explicit: a point whose argument is gone becomes
    :class:`Poisoned` unless ``heuristic`` enables the cone continuation.
    """
    if isinstance(p, Poisoned):
        return p
    if isinstance(p, RealAxis):
        return RealAxis(_real_image_sign(f, 1), real_mag_step(f, p.mag))
    if isinstance(p, Exact):
        sym = _symmetry_image(f, p.z)
        if sym is not None:
            return sym
        return _complex_step(f, p.z.real, p.z.imag, 0.0)
    if isinstance(p, MagnitudeOnly):
        return _cone_step(f, p.mag) if heuristic else Poisoned()
    # LogPolar
    if not p.arg_trusted:
        return _cone_step(f, exp_t(from_real(p.L))) if heuristic else Poisoned()
    rho = math.exp(p.L)
    x, y = rho * math.cos(p.theta), rho * math.sin(p.theta)
    err = rho * (p.arg_error + EPS_MACH)
    if err <= THETA_TOL and rho <= A_MAX:
        return _complex_step(f, x, y, err)
    # argument of the image is lost; keep a lower bound on its modulus
    ax = max(abs(x) - err, 0.0)
    if ax > 20.0:
        L = math.log(f.abs_lam) + f.q * (ax - LOG2)
    elif ax > 0.0:
        L = math.log(f.abs_lam) + f.q * math.log(math.sinh(ax))
    else:
        return MagnitudeOnly(from_real(0.0))
    return MagnitudeOnly(exp_t(from_real(L)) if L >= 0 else from_real(math.exp(L)))


def canonical(f: FunctionSpec, p: OrbitPoint) -> OrbitPoint:
    """Move exactly real points onto the real-axis tower track (real ``lam`` only).

    Orbit and schedule then share :func:`real_mag_step`, so a real orbit
    equal to the schedule compares equal at every index.
    """
    if isinstance(p, Exact) and p.z.imag == 0.0 and f.real_lambda:
        x = p.z.real
        return RealAxis(-1 if x < 0 else 1, from_real(abs(x)))
    return p


# ---------------------------------------------------------------- max modulus


@dataclass(frozen=True)
class MaxModulusSchedule:
    R: float
    values: tuple[TowerReal, ...]

    def __len__(self):
        return len(self.values)

    def __getitem__(self, n: int) -> TowerReal:
        return self.values[n]


def max_modulus(f: FunctionSpec, r: float) -> float:
    """``M(r) = |lam| cosh(r)**q``: the maximum of ``|f|`` on ``|z| = r`` sits on the real axis."""
    return f.abs_lam * math.cosh(r) ** f.q


def _log_m_minus_log_r(f: FunctionSpec, r: float) -> float:
    logcosh = r - LOG2 + math.log1p(math.exp(-2 * r))
    return math.log(f.abs_lam) + f.q * logcosh - math.log(r)


def check_base_radius(f: FunctionSpec, R: float, grid: int = 20000, upper: float = 700.0) -> None:
    """Raise :class:`ScheduleError` unless ``M(r) > r`` for all sampled ``r >= R``.

    Past ``upper`` the exponential dominates for every admissible ``lam``
    with ``|lam| >= exp(-600)``.
    """
    if not (R > 0 and math.isfinite(R)):
        raise ScheduleError(f"base radius must be positive, got {R}")
    if R >= upper:
        return
    step_ = (upper - R) / grid
    for i in range(grid + 1):
        r = R + i * step_
        if _log_m_minus_log_r(f, r) <= 0:
            raise ScheduleError(
                f"M(r) <= r at r = {r:.6g}: base radius {R} too small for lambda={f.lam}, q={f.q}"
            )


def max_modulus_schedule(f: FunctionSpec, R: float, N: int) -> MaxModulusSchedule:
    """Towers ``M^0(R), ..., M^N(R)`` via the real-axis update."""
    check_base_radius(f, R)
    vals = [from_real(R)]
    for _ in range(N):
        nxt = real_mag_step(f, vals[-1])
        if not nxt > vals[-1]:
            raise ScheduleError("max-modulus schedule is not increasing")
        vals.append(nxt)
    return MaxModulusSchedule(float(R), tuple(vals))


def circle_max_check(f: FunctionSpec, r: float, samples: int) -> float:
    """Largest ``|f|`` over ``samples`` equispaced points of ``|z| = r``."""
    if r == 0:
        return abs(evaluate(f, 0j))
    best = 0.0
    for j in range(samples):
        z = cmath.rect(r, 2 * math.pi * j / samples)
        best = max(best, abs(evaluate(f, z)))
    return best
