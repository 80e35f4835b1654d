import math

import numpy as np
import pytest

import eqstate as eq
from eqstate.errors import OrbitTruncated, OutOfRange

# Binary maps (doubling, tent s=2) collapse to the fixed point after ~52
# float iterations (mantissa exhaustion), so orbit-based tests on them use
# N <= 50; LSV orbits are nonlinear and run to any length.
NBIN = 50


def test_contraction_values():
    c = eq.Contraction.exponential(math.log(2))
    assert eq.contraction_value(c, 3, 1.0) == pytest.approx(0.125, abs=1e-15)
    cs = eq.Contraction.sqrt_exponential(1.0)
    assert eq.contraction_value(cs, 4, 1.0) == pytest.approx(math.exp(-2), abs=1e-15)
    assert eq.contraction_value(c, 1, 0.0) == 0.0


def test_contraction_validation():
    with pytest.raises(OutOfRange):
        eq.Contraction.exponential(0.0)
    with pytest.raises(OutOfRange):
        eq.Contraction.from_table([0.9, 0.5])  # a1*a1 = 0.81 > a2 = 0.5
    tab = eq.Contraction.from_table([0.5, 0.26, 0.131])
    assert tab.factor(2) == 0.26
    with pytest.raises(OutOfRange):
        tab.factor(4)
    # submultiplicativity and summability of the closed forms
    for c in (eq.Contraction.exponential(0.3), eq.Contraction.sqrt_exponential(0.7)):
        for n in range(1, 10):
            for m in range(1, 10):
                assert c.factor(n) * c.factor(m) <= c.factor(n + m) * (1 + 1e-12)
        assert c.summable_bound() < math.inf


def test_pliss_doubling_all_detected(doubling_map):
    rep = eq.pliss_times(doubling_map, 0.3141, NBIN, 0.5 * math.log(2))
    assert rep.frequency == 1.0
    assert rep.times == tuple(range(1, NBIN + 1))


def test_pliss_tent_all_detected(tent_map):
    rep = eq.pliss_times(tent_map, 0.3, NBIN, math.log(2) - 1e-9)
    assert rep.frequency == 1.0


def test_pliss_lsv_alpha3_starved():
    m = eq.lsv(3.0)
    rep = eq.pliss_times(m, 0.01, 1000, 0.3)
    assert rep.frequency < 0.5


def test_pliss_monotone_in_lambda(lsv06, doubling_map):
    for m, x, N in ((lsv06, 0.377, 2000), (doubling_map, 0.3141, NBIN)):
        weak = set(eq.pliss_times(m, x, N, 0.15).times)
        strong = set(eq.pliss_times(m, x, N, 0.3).times)
        assert strong <= weak


def test_zooming_doubling_all_detected(doubling_map):
    c = eq.Contraction.exponential(math.log(2))
    rep = eq.zooming_frequency(doubling_map, 0.3141, NBIN, c, 0.2)
    assert rep.frequency == 1.0


def test_zooming_degenerate_ball(doubling_map):
    c = eq.Contraction.exponential(math.log(2))
    rep = eq.zooming_frequency(doubling_map, 0.3141, 30, c, 0.0)
    assert rep.times == ()


def test_zooming_lsv_positive_frequency(lsv06):
    c = eq.Contraction.exponential(0.2)
    rng = np.random.Generator(np.random.Philox(99))
    x = float(rng.uniform(0, 1))
    rep = eq.zooming_frequency(lsv06, x, 2000, c, 0.1)
    assert rep.frequency > 0


def test_zooming_times_are_pliss_times_with_allowance(doubling_map, tent_map):
    # geometric detection at exponential rate lam implies the Pliss condition
    # at 0.9 lam on bounded-distortion maps
    lam = math.log(2)
    c = eq.Contraction.exponential(lam)
    for m, x in ((doubling_map, 0.3141), (tent_map, 0.2718)):
        z = set(eq.zooming_frequency(m, x, NBIN, c, 0.2).times)
        p = set(eq.pliss_times(m, x, NBIN, 0.9 * lam).times)
        assert z <= p


def test_frequency_shift_invariance(doubling_map):
    N = 40
    lam = 0.5 * math.log(2)
    x = 0.3141
    fx = eq.evaluate(doubling_map, x)
    r1 = eq.pliss_times(doubling_map, x, N, lam)
    r2 = eq.pliss_times(doubling_map, fx, N, lam)
    sym = len(set(r1.times) ^ set(r2.times))
    assert abs(r1.frequency - r2.frequency) <= 2.0 / N + sym / N


def test_lyapunov_examples(doubling_map, tent_map):
    assert eq.lyapunov(doubling_map, 0.3141, NBIN) == pytest.approx(math.log(2), abs=1e-14)
    assert eq.lyapunov(tent_map, 0.2718, NBIN) == pytest.approx(math.log(2), abs=1e-14)


def test_lyapunov_chebyshev():
    mq = eq.quadratic(-2.0)
    lam = eq.lyapunov(mq, 0.3, 100_000)
    assert lam == pytest.approx(math.log(2), abs=0.02)


def test_lyapunov_truncation_raises(doubling_map):
    with pytest.raises(OrbitTruncated):
        eq.lyapunov(doubling_map, 0.3141, 1000)


def test_zooming_report_fields(lsv06):
    c = eq.Contraction.exponential(0.2)
    rep = eq.zooming_frequency(lsv06, 0.777, 500, c, 0.1)
    assert rep.N == 500
    assert rep.frequency == len([t for t in rep.times if 1 <= t <= 500]) / 500
    assert rep.params["delta"] == 0.1
    d = rep.to_json()
    assert d["N"] == 500 and d["times"] == list(rep.times)


def test_zooming_deterministic(lsv06):
    c = eq.Contraction.exponential(0.2)
    a = eq.zooming_frequency(lsv06, 0.377, 1500, c, 0.1)
    b = eq.zooming_frequency(lsv06, 0.377, 1500, c, 0.1)
    assert a.times == b.times and a.frequency == b.frequency


def test_zooming_on_iterate(lsv06):
    # ell > 1 is handled by running the detector on the iterate map
    m2 = eq.iterate(lsv06, 2)
    c = eq.Contraction.exponential(0.3)
    rep = eq.zooming_frequency(m2, 0.88, 300, c, 0.05)
    assert rep.n_effective > 0
