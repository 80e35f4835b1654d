"""Zooming/hyperbolic time detection and Lyapunov exponents.

Two detectors are exposed.  `pliss_times` is the derivative-sum form:
n is detected iff every orbit suffix ending at n expands at rate at
least lambda.  `zooming_frequency` is the geometric certifying form:
n is detected iff the inverse branch of f^n along the orbit exists on
the delta-ball around f^n(x) and every intermediate pullback meets the
prescribed contraction schedule.  Ball pullbacks act on interval
endpoints only and are exact up to the root-finder tolerance.

For zooming with respect to f^ell build the ell-th iterate map first
(maps.iterate) and run with ell = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import OrbitTruncated, OutOfRange
from .maps import MapSpec, strict_orbit

__all__ = [
    "Contraction",
    "ZoomingReport",
    "contraction_value",
    "pliss_times",
    "zooming_frequency",
    "lyapunov",
]


@dataclass(frozen=True)
class Contraction:
    """Backward-contraction schedule alpha_n(r) = a_n * r.

    Kinds: 'exponential' (a_n = e^{-rate n}), 'lipschitz_sqrt_exp'
    (a_n = e^{-rate sqrt(n)}) and 'lipschitz_table' (finite table).
    """

    kind: str
    rate: float = 0.0
    table: tuple = ()

    @staticmethod
    def exponential(rate: float) -> "Contraction":
        if rate <= 0:
            raise OutOfRange("exponential contraction needs rate > 0")
        return Contraction("exponential", rate=float(rate))

    @staticmethod
    def sqrt_exponential(rate: float) -> "Contraction":
        if rate <= 0:
            raise OutOfRange("sqrt-exponential contraction needs rate > 0")
        return Contraction("lipschitz_sqrt_exp", rate=float(rate))

    @staticmethod
    def from_table(seq) -> "Contraction":
        a = tuple(float(v) for v in seq)
        if not a:
            raise OutOfRange("empty contraction table")
        if any(v <= 0 or v >= 1 for v in a):
            raise OutOfRange("table factors must lie in (0, 1)")
        n = len(a)
        for i in range(1, n + 1):
            for j in range(1, n + 1 - i):
                if a[i - 1] * a[j - 1] > a[i + j - 1] * (1 + 1e-12):
                    raise OutOfRange(
                        f"table violates a_n*a_m <= a_(n+m) at ({i},{j})"
                    )
        return Contraction("lipschitz_table", table=a)

    def factor(self, n: int) -> float:
        if n < 1:
            raise OutOfRange("contraction index n >= 1 required")
        if self.kind == "exponential":
            return math.exp(-self.rate * n)
        if self.kind == "lipschitz_sqrt_exp":
            return math.exp(-self.rate * math.sqrt(n))
        if n > len(self.table):
            raise OutOfRange(f"contraction table has no entry for n={n}")
        return self.table[n - 1]

    def value(self, n: int, r: float) -> float:
        if r < 0:
            raise OutOfRange("radius r >= 0 required")
        return self.factor(n) * r

    def summable_bound(self) -> float:
        """Upper bound for sup_{r<=1} sum_n alpha_n(r)."""
        if self.kind == "exponential":
            q = math.exp(-self.rate)
            return q / (1 - q)
        if self.kind == "lipschitz_sqrt_exp":
            # sum e^{-c sqrt(n)} <= integral + first term
            c = self.rate
            return math.exp(-c) + 2.0 * (c + 1.0) / (c * c) * math.exp(-c)
        return float(sum(self.table))


def contraction_value(c: Contraction, n: int, r: float) -> float:
    """alpha_n(r)."""
    return c.value(n, r)


@dataclass(frozen=True)
class ZoomingReport:
    times: tuple
    N: int
    frequency: float
    truncated: bool
    n_effective: int
    params: dict = field(default_factory=dict)

    @staticmethod
    def build(times, N, truncated, n_effective, params):
        times = tuple(int(t) for t in times)
        return ZoomingReport(
            times=times,
            N=int(N),
            frequency=len([t for t in times if 1 <= t <= N]) / N,
            truncated=bool(truncated),
            n_effective=int(n_effective),
            params=dict(params),
        )

    def to_json(self) -> dict:
        return {
            "times": list(self.times),
            "N": self.N,
            "frequency": self.frequency,
            "truncated": self.truncated,
            "n_effective": self.n_effective,
            "params": self.params,
        }


def _orbit_log_derivs(m: MapSpec, pts, bidx):
    out = np.empty(len(bidx))
    for g in np.unique(bidx):
        mask = bidx == g
        out[mask] = np.log(np.abs(m.branches[g].df_many(pts[:-1][mask])))
    return out


def pliss_times(m: MapSpec, x: float, N: int, lam: float) -> ZoomingReport:
    """Times n with sum_{i=j}^{n-1} log|f'(f^i x)| >= lam (n-j) for all j < n."""
    pts, bidx, ok = strict_orbit(m, x, N)
    M = len(bidx)
    logd = _orbit_log_derivs(m, pts, bidx)
    S = np.concatenate(([0.0], np.cumsum(logd)))
    T = S - lam * np.arange(M + 1)
    if M:
        runmax = np.maximum.accumulate(T[:-1])
        det = np.nonzero(T[1:] >= runmax)[0] + 1
    else:
        det = np.array([], dtype=int)
    return ZoomingReport.build(det, N, not ok, M,
                               {"detector": "pliss", "lambda": lam, "ell": 1, "N": N})


def lyapunov(m: MapSpec, x: float, N: int) -> float:
    """(1/N) sum_{j<N} log|f'(f^j x)|."""
    pts, bidx, ok = strict_orbit(m, x, N)
    if len(bidx) < N:
        raise OrbitTruncated(
            f"orbit of {x!r} defined for {len(bidx)} < {N} steps"
        )
    return float(np.mean(_orbit_log_derivs(m, pts, bidx)))


# ---------------------------------------------------------------------------
# geometric detector


def _pull_endpoint_walk(m: MapSpec, g: int, w: float, target: float):
    """Preimage offset of lift-value `target` under the local inverse at w.

    `target` lives in branch g's lift frame; the walk crosses branch
    boundaries while the map continues continuously (mod the period on
    circles) and the orientation does not flip.  Returns the domain
    offset u - w, or None when no local inverse exists.
    """
    sp = m.space
    br = m.branches[g]
    yc = float(br.f(w))
    go_left = (target < yc) == br.increasing
    gb, off, dom_off = g, 0.0, 0.0
    for _ in range(len(m.branches) + 1):
        b2 = m.branches[gb]
        t2 = target - off
        if b2.img_lo - 1e-13 <= t2 <= b2.img_hi + 1e-13:
            u = b2.inverse(t2, 1e-13)
            return u + dom_off - w
        if go_left:
            nb = gb - 1
            shared_here = b2.lo
        else:
            nb = gb + 1
            shared_here = b2.hi
        if nb < 0 or nb >= len(m.branches):
            if not sp.circle:
                return None
            nb = (len(m.branches) - 1) if go_left else 0
            dom_off += -sp.length if go_left else sp.length
        b3 = m.branches[nb]
        if b3.increasing != b2.increasing:
            return None  # fold: not locally injective
        shared_there = b3.hi if go_left else b3.lo
        v_here = float(b2.f(shared_here)) + off
        off2 = v_here - float(b3.f(shared_there))
        jump = off2 - off
        if sp.circle:
            if abs(jump - sp.length * round(jump / sp.length)) > 1e-9:
                return None  # genuine discontinuity
        elif abs(jump) > 1e-9:
            return None
        gb, off = nb, off2
    return None


def zooming_frequency(m: MapSpec, x: float, N: int, c: Contraction,
                      delta: float, slack: float = 1e-9) -> ZoomingReport:
    """Detected (alpha, delta, 1)-zooming times along the orbit of x.

    n is detected iff pulling the delta-ball at f^n(x) back along the
    orbit's inverse branches succeeds down to time 0 and the pullback at
    time j has diameter <= alpha_{n-j}(diameter of the ball), for all j.
    """
    params = {"detector": "zooming", "contraction": c.kind, "rate": c.rate,
              "delta": delta, "ell": 1, "N": N}
    if c.kind == "lipschitz_table":
        params["table"] = list(c.table)
    if delta < 0:
        raise OutOfRange("delta >= 0 required")
    if delta == 0:
        return ZoomingReport.build([], N, False, N, params)
    sp = m.space
    if sp.circle and delta >= sp.length / 2:
        raise OutOfRange("delta must be below half the circle length")
    pts, bidx, ok = strict_orbit(m, x, N)
    M = len(bidx)
    centers = pts[1:]
    if sp.circle:
        rel_lo = np.full(M, -delta)
        rel_hi = np.full(M, delta)
    else:
        rel_lo = np.maximum(sp.lo - centers, -delta)
        rel_hi = np.minimum(sp.hi - centers, delta)
    D0 = rel_hi - rel_lo
    # compact state: candidate n = active[i] + 1, pullback offsets rel_*
    active = np.arange(M)
    detected = []

    for k in range(1, M + 1):
        if len(active) == 0:
            break
        j = active + 1 - k
        w = pts[j]
        bs = bidx[j]
        na = len(active)
        fail = np.zeros(na, dtype=bool)
        new_lo = np.empty(na)
        new_hi = np.empty(na)
        for g in np.unique(bs):
            mask = bs == g
            br = m.branches[g]
            ww = w[mask]
            yc = br.f_many(ww)
            Ylo = yc + rel_lo[mask]
            Yhi = yc + rel_hi[mask]
            inr = (Ylo >= br.img_lo - 1e-14) & (Yhi <= br.img_hi + 1e-14)
            wlo = np.empty(len(ww))
            whi = np.empty(len(ww))
            if inr.all():
                dwc = br.df_many(ww)
                targets = np.concatenate([Ylo, Yhi])
                base = np.concatenate([ww, ww])
                ycc = np.concatenate([yc, yc])
                dcc = np.concatenate([dwc, dwc])
                sol = br.inverse_many_warm(targets, base + (targets - ycc) / dcc)
                a, b = sol[:len(ww)], sol[len(ww):]
                if br.increasing:
                    wlo, whi = a, b
                else:
                    wlo, whi = b, a
            else:
                if np.any(inr):
                    dwc = br.df_many(ww[inr])
                    targets = np.concatenate([Ylo[inr], Yhi[inr]])
                    ycc = np.concatenate([yc[inr], yc[inr]])
                    base = np.concatenate([ww[inr], ww[inr]])
                    dcc = np.concatenate([dwc, dwc])
                    sol = br.inverse_many_warm(targets, base + (targets - ycc) / dcc)
                    nn = int(inr.sum())
                    a, b = sol[:nn], sol[nn:]
                    if br.increasing:
                        wlo[inr], whi[inr] = a, b
                    else:
                        wlo[inr], whi[inr] = b, a
                sub_fail = np.zeros(len(ww), dtype=bool)
                for i in np.nonzero(~inr)[0]:
                    u1 = _pull_endpoint_walk(m, g, float(ww[i]), float(Ylo[i]))
                    u2 = _pull_endpoint_walk(m, g, float(ww[i]), float(Yhi[i]))
                    if u1 is None or u2 is None:
                        sub_fail[i] = True
                        wlo[i] = whi[i] = ww[i]
                    else:
                        lo_i, hi_i = sorted((u1, u2))
                        wlo[i], whi[i] = ww[i] + lo_i, ww[i] + hi_i
                fail[mask] |= sub_fail
            new_lo[mask] = wlo - ww
            new_hi[mask] = whi - ww
        rel_lo, rel_hi = new_lo, new_hi
        diam = rel_hi - rel_lo
        bound = c.factor(k) * D0[active] * (1.0 + slack) + 1e-15
        fail |= diam > bound
        done = (active + 1 == k) & ~fail
        if done.any():
            detected.extend((active[done] + 1).tolist())
        keep = ~(fail | done)
        active = active[keep]
        rel_lo = rel_lo[keep]
        rel_hi = rel_hi[keep]

    detected.sort()
    return ZoomingReport.build(detected, N, not ok, M, params)
