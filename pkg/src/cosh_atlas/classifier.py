"""Escape-speed classification.

A point is certified fast escaping with delay ``k`` at depth ``N`` when
``|f^(n+k)(z)| >= M^n(R)`` holds for ``n = 0..N`` in tower order. This is a
finite-depth witness for membership of ``f^(-k)(A_R(f))``, never more.
Bounded orbits are recognised by convergence to a verified attracting real
fixed point.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from . import dynamics as dyn
from .orbits import orbit_magnitudes
from .tower import TowerReal, less_arr, power, rate_functional


class Mode(str, enum.Enum):
    RIGOROUS = "rigorous_horizon"
    HEURISTIC = "tower_heuristic"


class Status(enum.IntEnum):
    FAST = 0
    ATTRACTED = 1
    UNDETERMINED = 2


REASONS = ("horizon", "precision", "maxiter")


@dataclass(frozen=True)
class ClassifyParams:
    R: float = 1.0
    N_depth: int = 12
    K_delay: int = 8
    maxiter: int = 10_000
    eps_attract: float = 1e-9
    mode: Mode = Mode.RIGOROUS

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        for name, typ in (("R", float), ("N_depth", int), ("K_delay", int), ("maxiter", int), ("eps_attract", float)):
            object.__setattr__(self, name, typ(getattr(self, name)))
        if self.N_depth < 0:
            raise ValueError("N_depth must be >= 0")
        if self.K_delay < 0:
            raise ValueError("K_delay must be >= 0")
        if not self.eps_attract > 0:
            raise ValueError("eps_attract must be positive")
        if self.maxiter < 1:
            raise ValueError("maxiter must be >= 1")
        if not self.R > 0:
            raise ValueError("R must be positive")

    def to_json(self) -> dict:
        return {
            "R": self.R,
            "N_depth": self.N_depth,
            "K_delay": self.K_delay,
            "maxiter": self.maxiter,
            "eps_attract": self.eps_attract,
            "mode": self.mode.value,
        }


@dataclass(frozen=True)
class RateEstimate:
    b: tuple[float, ...]
    liminf_est: float
    limsup_est: float
    window: tuple[int, int]


@dataclass(frozen=True)
class ClassificationVerdict:
    status: Status
    delay: int | None = None
    depth: int | None = None
    mode: Mode | None = None
    target: complex | None = None
    steps: int | None = None
    reason: str | None = None
    rate: RateEstimate | None = None

    @property
    def certified(self) -> bool:
        return self.status is Status.FAST

    def to_json(self) -> dict:
        out: dict = {"status": self.status.name}
        if self.status is Status.FAST:
            out.update(delay=self.delay, depth=self.depth, mode=self.mode.value)
        elif self.status is Status.ATTRACTED:
            out.update(target=[self.target.real, self.target.imag], steps=self.steps)
        else:
            out["reason"] = self.reason
        if self.rate is not None:
            out["rate"] = {
                "b": list(self.rate.b),
                "liminf_est": self.rate.liminf_est,
                "limsup_est": self.rate.limsup_est,
                "window": list(self.rate.window),
            }
        return out


@dataclass(frozen=True)
class FixedPointReport:
    location: float
    multiplier: float
    type: str


# ---------------------------------------------------------------- fixed points


def find_fixed_points_real(f: dyn.FunctionSpec, lo: float, hi: float, grid: int) -> list[FixedPointReport]:
    """Real fixed points by sign-change bracketing and bisection.

    Needs real ``lam`` so that ``f`` maps the real line to itself.
    """
    if not f.real_lambda:
        raise ValueError("real fixed points need a real lambda")
    if not (lo < hi <= 700):
        raise ValueError("need lo < hi <= 700")

    def phi(x):
        return f.lam.real * math.cosh(x) ** f.q - x

    xs = np.linspace(lo, hi, grid + 1)
    vals = [phi(x) for x in xs]
    roots = []
    for a, b, fa, fb in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(float(a))
            continue
        if fa * fb > 0:
            continue
        a, b = float(a), float(b)
        while b - a > 1e-13:
            mid = 0.5 * (a + b)
            fm = phi(mid)
            if fm == 0.0:
                a = b = mid
                break
            if (fm < 0) == (fa < 0):
                a, fa = mid, fm
            else:
                b = mid
        roots.append(0.5 * (a + b))
    if vals[-1] == 0.0:
        roots.append(float(xs[-1]))
    out = []
    for p in roots:
        mult = derivative_real(f, p)
        if abs(abs(mult) - 1.0) < 1e-9:
            kind = "neutral"
        else:
            kind = "attracting" if abs(mult) < 1 else "repelling"
        out.append(FixedPointReport(p, mult, kind))
    return out


def derivative_real(f: dyn.FunctionSpec, x: float) -> float:
    return f.lam.real * f.q * math.cosh(x) ** (f.q - 1) * math.sinh(x)


@functools.lru_cache(maxsize=64)
def attracting_points(f: dyn.FunctionSpec) -> tuple[float, ...]:
    """Verified attracting real fixed points, searched on ``[-50, 50]``."""
    if not f.real_lambda:
        return ()
    return tuple(
        p.location
        for p in find_fixed_points_real(f, -50.0, 50.0, 100_000)
        if p.type == "attracting" and abs(dyn.evaluate(f, p.location) - p.location) < 1e-12
    )


def basin_test(f: dyn.FunctionSpec, z: complex, target: complex, eps: float, maxiter: int) -> bool:
    """True iff some iterate within ``maxiter`` lands within ``eps`` of ``target``
    at a point where ``f`` is a local contraction."""
    w = complex(z)
    for _ in range(maxiter + 1):
        if abs(w - target) < eps and abs(dyn.derivative(f, w)) < 1:
            return True
        if abs(w.real) > 700 or not math.isfinite(abs(w)):
            return False
        w = dyn.evaluate(f, w)
    return False


def default_radius(f: dyn.FunctionSpec) -> float:
    """1 when ``M(r) > r`` everywhere, else the first integer past the largest
    real solution of ``M(r) = r`` plus a half."""
    try:
        dyn.check_base_radius(f, 1.0)
        return 1.0
    except dyn.ScheduleError:
        pass
    xs = np.linspace(1e-6, 700, 700_001)
    g = np.log(f.abs_lam) + f.q * (xs - dyn.LOG2 + np.log1p(np.exp(-2 * xs))) - np.log(xs)
    bad = xs[g <= 0]
    return float(math.ceil(bad.max() + 0.5))


# ---------------------------------------------------------------- classification


@functools.lru_cache(maxsize=64)
def _schedule_arrays(f: dyn.FunctionSpec, R: float, N: int):
    sched = dyn.max_modulus_schedule(f, R, N)
    return (
        np.array([t.m for t in sched.values], dtype=np.int64),
        np.array([t.r for t in sched.values]),
    )


@dataclass
class BatchVerdicts:
    """Column-wise verdicts for many points (the grid-friendly form)."""

    status: np.ndarray
    delay: np.ndarray
    depth: np.ndarray
    reason: np.ndarray  # index into REASONS, -1 when not undetermined
    target: np.ndarray
    steps: np.ndarray
    mode: Mode = Mode.RIGOROUS
    extra: dict = field(default_factory=dict)

    def verdict(self, i: int) -> ClassificationVerdict:
        st = Status(int(self.status[i]))
        if st is Status.FAST:
            return ClassificationVerdict(st, int(self.delay[i]), int(self.depth[i]), self.mode)
        if st is Status.ATTRACTED:
            return ClassificationVerdict(st, target=complex(self.target[i]), steps=int(self.steps[i]))
        return ClassificationVerdict(st, reason=REASONS[int(self.reason[i])])


def _attract_batch(f, z0, params, idx, out_status, out_target, out_steps, out_reason):
    targets = attracting_points(f)
    if not targets or idx.size == 0:
        return
    tarr = np.array(targets, dtype=complex)
    w = z0[idx].astype(complex)
    active = np.arange(idx.size)
    c_low = f.lam * f.q
    for it in range(params.maxiter + 1):
        if active.size == 0:
            break
        wa = w[active]
        d = np.abs(wa[:, None] - tarr[None, :])
        near = d < params.eps_attract
        hit = near.any(axis=1)
        if np.any(hit):
            ch = np.cosh(wa[hit])
            deriv = c_low * (ch if f.q == 2 else 1.0) * np.sinh(wa[hit])
            contract = np.abs(deriv) < 1
            hidx = np.flatnonzero(hit)[contract]
            gi = idx[active[hidx]]
            out_status[gi] = Status.ATTRACTED
            out_target[gi] = tarr[near[hidx].argmax(axis=1)]
            out_steps[gi] = it
            hit[np.flatnonzero(hit)[~contract]] = False
        gone = ~np.isfinite(wa) | (np.abs(wa.real) > 700)
        # escaped orbits are left with their earlier undetermined reason
        keep = ~(hit | gone)
        active = active[keep]
        if active.size == 0 or it == params.maxiter:
            break
        wa = w[active]
        c = np.cosh(wa)
        w[active] = f.lam * (c if f.q == 1 else c * c)
    if active.size:
        out_reason[idx[active]] = REASONS.index("maxiter")


def classify_many(f: dyn.FunctionSpec, z, params: ClassifyParams) -> BatchVerdicts:
    """Classify every point of ``z`` (any shape; results are flat)."""
    z0 = np.asarray(z, dtype=complex).ravel()
    n = z0.size
    N, K = params.N_depth, params.K_delay
    sm, sr = _schedule_arrays(f, float(params.R), N)
    heuristic = params.mode is Mode.HEURISTIC
    M, Rr, V = orbit_magnitudes(f, z0, K + N, heuristic)
    nvalid = V.sum(axis=1)

    status = np.full(n, Status.UNDETERMINED, dtype=np.int8)
    delay = np.full(n, -1, dtype=np.int64)
    depth = np.full(n, -1, dtype=np.int64)
    reason = np.full(n, REASONS.index("horizon"), dtype=np.int8)
    target = np.zeros(n, dtype=complex)
    steps = np.full(n, -1, dtype=np.int64)

    todo = np.ones(n, dtype=bool)
    for k in range(K + 1):
        neff = np.minimum(N, nvalid - 1 - k)
        if not heuristic:
            usable = neff >= 0
        else:
            usable = neff >= N
        cols = slice(k, k + N + 1)
        below = less_arr(M[:, cols], Rr[:, cols], sm[None, :], sr[None, :])
        below &= np.arange(N + 1)[None, :] <= neff[:, None]
        ok = todo & usable & ~below.any(axis=1)
        status[ok] = Status.FAST
        delay[ok] = k
        depth[ok] = neff[ok]
        todo &= ~ok
    if not heuristic:
        poisoned = todo & (nvalid < K + N + 1)
        reason[poisoned] = REASONS.index("precision")
    _attract_batch(f, z0, params, np.flatnonzero(todo), status, target, steps, reason)
    reason[status != Status.UNDETERMINED] = -1
    return BatchVerdicts(status, delay, depth, reason, target, steps, params.mode)


def classify(f: dyn.FunctionSpec, z: complex, params: ClassifyParams) -> ClassificationVerdict:
    """Classify one point; the same code path as grid marking."""
    return classify_many(f, np.array([complex(z)]), params).verdict(0)


# ---------------------------------------------------------------- rates


def _tail(b: Sequence[float]) -> tuple[float, float, tuple[int, int]]:
    n = len(b)
    start = n - max(1, n // 3)
    tail = b[start:]
    return min(tail), max(tail), (start, n - 1)


def rate_sequence(
    f: dyn.FunctionSpec, z: complex, N: int, mode: Mode | str = Mode.RIGOROUS
) -> RateEstimate:
    """``b_n = F^(-n)(|f^n(z)|)`` for the known part of the orbit up to ``N``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    M, Rr, V = orbit_magnitudes(f, np.array([complex(z)]), N, Mode(mode) is Mode.HEURISTIC)
    b = []
    for n in range(N + 1):
        if not V[0, n]:
            break
        b.append(rate_functional(TowerReal(int(M[0, n]), float(Rr[0, n])), n))
    lo, hi, win = _tail(b)
    return RateEstimate(tuple(b), lo, hi, win)


GROWTH_CLASSES = ("bounded-rate", "decaying-rate", "exploding-rate")
RATE_DRIFT_TOL = 0.05


def growth_class_test(a: Sequence[TowerReal]) -> str:
    """Classify ``b_n = F^(-n)(a_n)`` over the final third of the sequence.

    Iterated exponential growth makes ``b_n`` converge (super-exponentially
    fast) to a positive limit; polynomial growth drifts towards 0 like
    ``2/n``; faster-than-tower growth drifts upward or leaves float range.
    The verdict compares the relative drift across the tail with
    ``RATE_DRIFT_TOL``.
    """
    if len(a) < 10:
        raise ValueError("sequence too short (need >= 10 terms)")
    b = [rate_functional(t, n) for n, t in enumerate(a)]
    start = len(b) - max(3, len(b) // 3)
    tail = b[start:]
    if any(math.isinf(v) for v in tail):
        return "exploding-rate"
    if tail[-1] <= 0.0:
        return "decaying-rate"
    drift = (tail[-1] - tail[0]) / tail[0] if tail[0] > 0 else math.inf
    if drift < -RATE_DRIFT_TOL:
        return "decaying-rate"
    if drift > RATE_DRIFT_TOL:
        return "exploding-rate"
    return "bounded-rate"


def omega_orbit(delta: float, t0: float, n: int) -> list[TowerReal]:
    """``Omega_delta^j(t0)`` for ``j = 0..n`` with ``Omega_delta(t) = exp(delta*t)``."""
    from .tower import exp_t, from_real, mul_scalar

    seq = [from_real(t0)]
    for _ in range(n):
        seq.append(exp_t(mul_scalar(seq[-1], delta)))
    return seq


def power_sequence(a: Sequence[TowerReal], C: float) -> list[TowerReal]:
    """``a_n ** C`` in the log domain (terms below 1 are raised directly)."""
    from .tower import from_real

    out = []
    for t in a:
        if t.m == 0 and t.r < 1.0:
            out.append(from_real(t.r**C))
        else:
            out.append(power(t, C))
    return out


# ---------------------------------------------------------------- hyperbolic gap


def hyperbolic_gap(C: float) -> float:
    """Exponent ``delta`` with hyperbolic distance ``log(delta) = 2C`` between
    ``|z| = R`` and ``|z| = R**delta`` in the punctured disk metric."""
    if C < 0:
        raise ValueError("C must be non-negative")
    return math.exp(2.0 * C)


def annulus_distance(R: float, delta: float) -> float:
    """Radial distance from ``|z| = R`` to ``|z| = R**delta`` for the density
    ``1/(|z| log|z|)`` on ``{|z| > 1}``.

    Integrated numerically in ``t = log r`` (so ``dr/(r log r) = dt/t``); the
    closed form is ``log(delta)``.
    """
    if not R > 1:
        raise ValueError("R must exceed 1")
    if not delta >= 1:
        raise ValueError("delta must be >= 1")
    a = math.log(R)
    if delta == 1:
        return 0.0
    val, _ = integrate.quad(lambda t: 1.0 / t, a, delta * a, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val
