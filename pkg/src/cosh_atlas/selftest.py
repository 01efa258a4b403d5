"""Desk-scale invariant suites behind ``cosh-atlas selftest``.

Setting ``ATLAS_SELFTEST_FAULT=cosh_sign`` makes the suites evaluate
``-cosh`` instead of ``cosh``; the harness must then report a failure.
"""

from __future__ import annotations

import math
import os
import random
import time
from typing import Callable

import numpy as np

from . import dynamics as dyn
from .certifier import GridSpec, LoopCertificate, MarkedField, find_separating_cycle, winding_number
from .classifier import (
    ClassifyParams,
    Status,
    annulus_distance,
    classify,
    find_fixed_points_real,
    growth_class_test,
    omega_orbit,
    power_sequence,
)
from .rays import ExternalAddress, trace_ray
from .tower import from_real

FAULT_ENV = "ATLAS_SELFTEST_FAULT"


def _evaluator() -> Callable[[dyn.FunctionSpec, complex], complex]:
    if os.environ.get(FAULT_ENV) == "cosh_sign":
        return lambda f, z: -dyn.evaluate(f, z)
    return dyn.evaluate


def _check(cond: bool, msg: str):
    if not cond:
        raise AssertionError(msg)


def joukowski_identity(rng: random.Random):
    ev = _evaluator()
    h = dyn.PRESETS["h"]
    for _ in range(2000):
        z = complex(rng.uniform(-20, 20), rng.uniform(-20, 20))
        a, b = ev(h, z), dyn.joukowski(z)
        _check(abs(a - b) <= 1e-12 * abs(b), f"Joukowski identity broken: cosh({z}) = {a} but (w + 1/w)/2 = {b}")


def critical_values(rng: random.Random):
    ev = _evaluator()
    h = dyn.PRESETS["h"]
    for k in range(-5, 6):
        z = complex(0, k * math.pi)
        _check(abs(ev(h, z) - (-1) ** k) < 1e-12, f"h({k} pi i) != {(-1) ** k}")
        _check(abs(dyn.derivative(h, z)) < 1e-10, f"h'({k} pi i) != 0")


def fixed_points(rng: random.Random):
    g = dyn.PRESETS["g"]
    fps = find_fixed_points_real(g, 0, 5, 5000)
    _check(len(fps) == 2, f"expected two fixed points, got {len(fps)}")
    pa, pr = fps
    _check(abs(pa.location - 0.589) < 1e-3 and abs(pa.multiplier) < 1, "attracting point")
    _check(abs(pr.location - 2.127) < 1e-3 and pr.multiplier > 1, "repelling point")


def tower_roundtrip(rng: random.Random):
    prev = None
    xs = sorted(10 ** rng.uniform(-5, 300) for _ in range(5000))
    for x in xs:
        t = from_real(x)
        _check(abs(t.to_float() - x) <= 1e-12 * x, f"round trip of {x}")
        if prev is not None:
            _check(prev <= t, "tower order")
        prev = t


def real_axis(rng: random.Random):
    h = dyn.PRESETS["h"]
    p = ClassifyParams(R=1.0, N_depth=20, K_delay=8)
    for _ in range(20):
        v = classify(h, rng.uniform(-20, 20), p)
        _check(v.status is Status.FAST and v.delay <= 3, f"real point not certified: {v}")
    g = dyn.PRESETS["g"]
    v = classify(g, 0.3, ClassifyParams(R=3.0))
    _check(v.status is Status.ATTRACTED, "0.3 must be attracted for g")


def rates(rng: random.Random):
    for d in (0.5, 1.0, 2.0):
        seq = omega_orbit(d, 3.0, 50)
        _check(growth_class_test(seq) == "bounded-rate", f"Omega_{d} orbit")
        for C in (1.5, 3.0, 10.0):
            _check(growth_class_test(power_sequence(seq, C)) == "bounded-rate", f"power {C} of Omega_{d}")
    poly = [from_real(float(n) ** 3 + 1) for n in range(50)]
    _check(growth_class_test(poly) == "decaying-rate", "polynomial growth")


def hyperbolic_gap(rng: random.Random):
    for _ in range(20):
        R, C = rng.uniform(1.5, 100), rng.uniform(0, 3)
        _check(abs(annulus_distance(R, math.exp(2 * C)) - 2 * C) < 1e-9, "annulus distance")


def certifier(rng: random.Random):
    sq = [1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j, 1 + 1j]
    _check(winding_number(sq, 0) == 1 and winding_number(sq, 5) == 0, "square winding")
    _check(winding_number(sq[::-1], 0) == -1, "reversed winding")
    n = 16
    grid = GridSpec(0, 4.0, n)
    st = np.zeros((n, n), dtype=np.int8)
    st[8, 8] = Status.UNDETERMINED
    z = np.zeros((n, n), dtype=np.int64)
    fld = MarkedField(grid, ClassifyParams(), dyn.PRESETS["h"], st, z, z, z)
    c = find_separating_cycle(fld, grid.cell_center(8, 8))
    _check(isinstance(c, LoopCertificate) and len(c.vertices) == 9, "minimal 8-ring")


def rays(rng: random.Random):
    g = dyn.PRESETS["g"]
    pr = find_fixed_points_real(g, 0, 5, 5000)[1].location
    pt = trace_ray(ExternalAddress.constant(0, 40), 40, 10.0)
    _check(abs(pt.position - pr) < 1e-6, "zero-address endpoint")


SUITES: dict[str, list[tuple[str, Callable]]] = {
    "dynamics": [("joukowski", joukowski_identity), ("critical-values", critical_values)],
    "fixed-points": [("fixed-points", fixed_points)],
    "tower": [("tower-roundtrip", tower_roundtrip)],
    "classifier": [("real-axis", real_axis)],
    "rates": [("growth-classes", rates)],
    "gap": [("hyperbolic-gap", hyperbolic_gap)],
    "certifier": [("certifier", certifier)],
    "rays": [("rays", rays)],
}


def run(suite: str = "all", seed: int = 0, out=print) -> bool:
    if suite != "all" and suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from all, {', '.join(SUITES)}")
    names = list(SUITES) if suite == "all" else [suite]
    ok = True
    for name in names:
        for label, fn in SUITES[name]:
            t = time.perf_counter()
            try:
                fn(random.Random(seed))
                line = "PASS"
            except Exception as e:  # report and keep going
                ok = False
                line = f"FAIL  {type(e).__name__}: {e}"
            out(f"{name:<13}{label:<17}{time.perf_counter() - t:7.2f}s  {line}")
    return ok
