"""Cross-check the vectorized zooming detector against a scalar reference.

The reference re-implements the ball pullback independently: scalar
loops, local inverses through the two onto-circle branches of the LSV
map with explicit lift shifts, and the same diameter schedule.  Any
divergence between the two detected sets is a bug in one of them.
"""

import math

import numpy as np
import pytest

import eqstate as eq


def _lsv_funcs(alpha):
    A = 2.0 ** alpha

    def f(x):
        return x * (1 + A * x ** alpha) if x < 0.5 else 2 * x - 1

    def df(x):
        return 1 + (alpha + 1) * A * x ** alpha if x < 0.5 else 2.0

    def inv_left(y):
        lo, hi = 0.0, 0.5
        x = 0.5 * y
        for _ in range(200):
            fx = x * (1 + A * x ** alpha) - y
            if abs(fx) < 1e-15:
                return x
            d = 1 + (alpha + 1) * A * x ** alpha
            xn = x - fx / d
            if not (lo <= xn <= hi):
                if fx > 0:
                    hi = x
                else:
                    lo = x
                xn = 0.5 * (lo + hi)
            if xn == x:
                return x
            x = xn
        return x

    def inv_right(y):
        return 0.5 * (y + 1.0)

    return f, df, inv_left, inv_right


def _reference_zooming(alpha, x0, N, lam, delta, slack=1e-9):
    f, df, inv_left, inv_right = _lsv_funcs(alpha)
    orb = [x0]
    for _ in range(N):
        orb.append(f(orb[-1]))

    def local_inverse(w, Y):
        # preimage of lift-value Y near w: in-branch when Y lands in [0,1];
        # crossing the circle point [0] shifts the position by +-1, crossing
        # the interior break 1/2 does not
        left = w < 0.5
        if 0.0 <= Y <= 1.0:
            x = inv_left(Y) if left else inv_right(Y)
            return x - w
        if Y < 0.0:
            if left:
                return inv_right(Y + 1.0) - 1.0 - w
            return inv_left(Y + 1.0) - w
        if left:
            return inv_right(Y - 1.0) - w
        return inv_left(Y - 1.0) + 1.0 - w

    detected = []
    for n in range(1, N + 1):
        rl, rh = -delta, delta
        ok = True
        for k in range(1, n + 1):
            j = n - k
            w = orb[j]
            yc = w * (1 + 2.0 ** alpha * w ** alpha) if w < 0.5 else 2 * w - 1
            rl, rh = local_inverse(w, yc + rl), local_inverse(w, yc + rh)
            if rh - rl > 2 * delta * math.exp(-lam * k) * (1 + slack) + 1e-15:
                ok = False
                break
        if ok:
            detected.append(n)
    return detected


@pytest.mark.parametrize("alpha,delta,seed", [(0.6, 0.1, 5), (0.6, 0.3, 6), (1.2, 0.15, 7)])
def test_vectorized_matches_reference(alpha, delta, seed):
    rng = np.random.Generator(np.random.Philox(seed))
    x0 = float(rng.uniform(0, 1))
    N, lam = 400, 0.2
    m = eq.lsv(alpha)
    rep = eq.zooming_frequency(m, x0, N, eq.Contraction.exponential(lam), delta)
    ref = _reference_zooming(alpha, x0, N, lam, delta)
    assert list(rep.times) == ref


def test_pullback_interval_maps_onto_ball():
    # for a detected time, the certified pre-ball must map onto the ball:
    # push the reference pullback's endpoints forward and hit the ball edges
    alpha = 0.6
    f, _, inv_left, inv_right = _lsv_funcs(alpha)
    m = eq.lsv(alpha)
    x0 = 0.377
    N, lam, delta = 60, 0.25, 0.2
    rep = eq.zooming_frequency(m, x0, N, eq.Contraction.exponential(lam), delta)
    orb = [x0]
    for _ in range(N):
        orb.append(f(orb[-1]))

    def local_inverse(w, Y):
        left = w < 0.5
        if 0.0 <= Y <= 1.0:
            x = inv_left(Y) if left else inv_right(Y)
            return x - w
        if Y < 0.0:
            if left:
                return inv_right(Y + 1.0) - 1.0 - w
            return inv_left(Y + 1.0) - w
        if left:
            return inv_right(Y - 1.0) - w
        return inv_left(Y - 1.0) + 1.0 - w

    assert rep.times, "no zooming times detected at these parameters"
    for n in rep.times[:20]:
        rl, rh = -delta, delta
        for k in range(1, n + 1):
            w = orb[n - k]
            yc = f(w)
            rl, rh = local_inverse(w, yc + rl), local_inverse(w, yc + rh)
        for off, target in ((rl, orb[n] - delta), (rh, orb[n] + delta)):
            y = (orb[0] + off) % 1.0
            for _ in range(n):
                y = f(y) % 1.0
            assert abs((y - target + 0.5) % 1.0 - 0.5) < 1e-7
