import math
import random

import numpy as np
import pytest

from cosh_atlas import dynamics as dyn
from cosh_atlas.classifier import (
    ClassifyParams,
    Mode,
    Status,
    annulus_distance,
    attracting_points,
    basin_test,
    classify,
    classify_many,
    default_radius,
    find_fixed_points_real,
    growth_class_test,
    hyperbolic_gap,
    omega_orbit,
    power_sequence,
    rate_sequence,
)
from cosh_atlas.tower import from_real

H = dyn.PRESETS["h"]
G = dyn.PRESETS["g"]


@pytest.fixture(scope="module")
def g_points():
    pa, pr = find_fixed_points_real(G, 0, 5, 10_000)
    return pa, pr


def test_params_validation():
    with pytest.raises(ValueError):
        ClassifyParams(K_delay=-1)
    with pytest.raises(ValueError):
        ClassifyParams(eps_attract=0)
    with pytest.raises(ValueError):
        ClassifyParams(mode="nope")
    assert ClassifyParams(mode="tower_heuristic").mode is Mode.HEURISTIC


def test_classify_examples():
    v = classify(H, 1.0, ClassifyParams(R=1))
    assert v.status is Status.FAST and v.delay == 0 and v.depth == 12
    v = classify(H, 1j * math.pi / 2, ClassifyParams(R=1))
    assert v.status is Status.FAST and v.delay == 2
    v = classify(G, 0.3, ClassifyParams(R=3))
    assert v.status is Status.ATTRACTED
    assert v.target.real == pytest.approx(0.589, abs=1e-3)
    assert abs(v.target - attracting_points(G)[0]) == 0


def test_schedule_shift_equality():
    # the orbit of R is the schedule: equality at every index still certifies
    for x in (1.0, 1.7, 3.0, 12.5):
        v = classify(H, x, ClassifyParams(R=x, N_depth=20))
        assert v.status is Status.FAST and v.delay == 0 and v.depth == 20


def test_undetermined_reasons():
    # a deep Julia-set point loses its argument: precision in rigorous mode
    v = classify(H, 0.97 + 2.2j, ClassifyParams(R=1))
    assert v.status is Status.UNDETERMINED and v.reason == "precision"
    # the repelling fixed point of g neither escapes nor converges
    pr = find_fixed_points_real(G, 0, 5, 10_000)[1].location
    v = classify(G, pr, ClassifyParams(R=3, maxiter=50))
    assert v.status is Status.UNDETERMINED and v.reason == "maxiter"


def test_heuristic_reaches_full_depth():
    z = 1.5 + 1.5j
    rig = classify(H, z, ClassifyParams(R=1))
    heu = classify(H, z, ClassifyParams(R=1, mode="tower_heuristic"))
    assert rig.status is Status.FAST and rig.depth < 12
    assert heu.status is Status.FAST and heu.depth == 12 and heu.mode is Mode.HEURISTIC


def test_invalid_radius_propagates():
    with pytest.raises(dyn.ScheduleError):
        classify(G, 1.0, ClassifyParams(R=0.5))


def test_batch_matches_scalar():
    rng = np.random.default_rng(5)
    z = rng.uniform(-4, 4, 50) + 1j * rng.uniform(-4, 4, 50)
    p = ClassifyParams(R=1)
    b = classify_many(H, z, p)
    for i, w in enumerate(z):
        assert b.verdict(i) == classify(H, w, p)


def test_delay_monotone_in_depth():
    rng = np.random.default_rng(11)
    z = rng.uniform(-5, 5, 400) + 1j * rng.uniform(-5, 5, 400)
    hi = classify_many(H, z, ClassifyParams(R=1, N_depth=12))
    for N in (1, 4, 8, 11):
        lo = classify_many(H, z, ClassifyParams(R=1, N_depth=N))
        fast = hi.status == Status.FAST
        assert np.all(lo.status[fast] == Status.FAST)
        assert np.all(lo.delay[fast] <= hi.delay[fast])


def test_r_robustness():
    rng = np.random.default_rng(2)
    z = rng.uniform(-6, 6, 100) + 1j * rng.uniform(-6, 6, 100)
    a = classify_many(H, z, ClassifyParams(R=1, N_depth=12, K_delay=8))
    # k' <= k + 2 needs two more delays of budget
    b = classify_many(H, z, ClassifyParams(R=2, N_depth=10, K_delay=10))
    fast = a.status == Status.FAST
    assert fast.sum() > 50
    assert np.all(b.status[fast] == Status.FAST)
    assert np.all(b.delay[fast] <= a.delay[fast] + 2)


def test_fixed_points_of_g(g_points):
    pa, pr = g_points
    assert pa.location == pytest.approx(0.589, abs=1e-3) and pa.type == "attracting"
    assert pa.multiplier == pytest.approx(math.sinh(pa.location) / 2, rel=1e-12)
    assert pa.multiplier == pytest.approx(0.312, abs=1e-3)
    assert pr.location == pytest.approx(2.127, abs=1e-3) and pr.type == "repelling"
    assert pr.multiplier == pytest.approx(2.068, abs=1e-3)
    for p in g_points:
        assert abs(dyn.evaluate(G, p.location) - p.location) < 1e-12


def test_fixed_point_empty_cases():
    assert find_fixed_points_real(H, 0, 5, 10_000) == []
    assert find_fixed_points_real(G, -1, 0.5, 10_000) == []


def test_basin(g_points):
    pa = g_points[0].location
    assert basin_test(G, 0.0, pa, 1e-6, 200)
    assert basin_test(G, 2.0, pa, 1e-6, 200)
    assert not basin_test(G, 3.0, pa, 1e-6, 200)


def test_default_radius():
    assert default_radius(H) == 1.0
    R = default_radius(G)
    assert R > 2.127
    dyn.max_modulus_schedule(G, R, 10)


def test_rate_sequence_examples():
    r = rate_sequence(H, 1.0, 30)
    assert all(0.1 <= b <= 10 for b in r.b[5:])
    assert r.window == (21, 30)
    r = rate_sequence(G, 0.3, 30)
    assert r.b[-1] < 0.1 and r.b[-1] < r.b[10]
    r0 = rate_sequence(H, 0.0, 5)
    assert r0.b[0] == 0.0
    assert all(0.1 <= b <= 10 for b in r0.b[1:])


def test_rate_band_for_certified_points():
    rng = np.random.default_rng(4)
    z = rng.uniform(-4, 4, 60) + 1j * rng.uniform(-4, 4, 60)
    b = classify_many(H, z, ClassifyParams(R=1))
    for i in np.flatnonzero(b.status == Status.FAST):
        r = rate_sequence(H, z[i], 20)
        assert 0.1 <= r.liminf_est and r.limsup_est <= 10
    r = rate_sequence(G, 0.3, 40)
    assert r.limsup_est < 0.1 and r.b[-1] < r.b[len(r.b) // 2] < r.b[5]


def test_growth_classes():
    for d in (0.5, 1.0, 2.0):
        seq = omega_orbit(d, 1.0 if d >= 1 else 3.0, 50)
        assert growth_class_test(seq) == "bounded-rate"
        for C in (1.1, 3.0, 10.0):
            assert growth_class_test(power_sequence(seq, C)) == "bounded-rate"
    assert growth_class_test([from_real(float(n)) for n in range(60)]) == "decaying-rate"
    fast = omega_orbit(1.0, 1.0, 30)
    # one extra exponential per step outruns every fixed tower height
    doubled = [fast[0]] + [fast[min(2 * n, 30)] for n in range(1, 31)]
    assert growth_class_test(doubled) == "exploding-rate"
    with pytest.raises(ValueError):
        growth_class_test(fast[:5])


def test_hyperbolic_gap():
    assert hyperbolic_gap(0) == 1
    assert hyperbolic_gap(0.5) == pytest.approx(math.e)
    assert hyperbolic_gap(1) == pytest.approx(7.389, abs=1e-3)


def test_annulus_distance():
    assert annulus_distance(10, 2) == pytest.approx(math.log(2), abs=1e-12)
    assert annulus_distance(10, 1) == 0
    assert annulus_distance(math.e, math.e**2) == pytest.approx(2.0, abs=1e-12)
    rng = random.Random(9)
    for _ in range(100):
        R, d = rng.uniform(1.0001, 50), rng.uniform(1.0001, 5)
        assert abs(annulus_distance(R, d) - math.log(d)) < 1e-9
    with pytest.raises(ValueError):
        annulus_distance(1.0, 2)
