"""Pressure curves, phase-transition scans, diagnostics and inequality oracles.

The full pressure of an intermittent map at parameter t is reported as the
maximum of the induced (expanding) root and the neutral-fixed-point
competitor: the induced scheme only sees measures charging the base, while
a Dirac mass at an indifferent fixed point contributes h = 0 plus the
potential there.  Phase-transition detection is a slope-gap heuristic with
explicit error bars, never a claim of rigor.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import NoNeutralPoints, NoRoot, OrbitEscaped, OutOfRange
from .inducing import InducingScheme, LevelCounts
from .maps import MapSpec
from .thermo import (
    InducedPotential,
    Potential,
    _entropy_arr,
    delta_F,
    gibbs_equilibrium,
    induced_potential,
)

__all__ = [
    "PressureCurve",
    "SequencePair",
    "pressure_curve",
    "dirac_competitor",
    "phase_transition_scan",
    "OscillationBudget",
    "oscillation_budget",
    "CEDiagnostic",
    "collet_eckmann_diagnostic",
    "LogSumReport",
    "log_sum_check",
    "EntropyRatioReport",
    "entropy_ratio_check",
    "ratio_decay_probe",
    "run_verification",
]


# ---------------------------------------------------------------------------
# pressure curves


@dataclass(frozen=True)
class PressureCurve:
    potential: str
    t: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    status: tuple
    left_slopes: np.ndarray
    right_slopes: np.ndarray

    def convexity_defects(self) -> np.ndarray:
        """Second divided differences at interior grid points."""
        t, v = self.t, self.values
        return ((v[2:] - v[1:-1]) / (t[2:] - t[1:-1])
                - (v[1:-1] - v[:-2]) / (t[1:-1] - t[:-2]))

    def rows(self):
        for i in range(len(self.t)):
            yield (self.t[i], self.values[i], self.errors[i],
                   self.left_slopes[i], self.right_slopes[i], self.status[i])


def dirac_competitor(m: MapSpec, phi: Potential, t: float) -> float:
    """Best value h + int(t phi) over Dirac masses at neutral fixed points."""
    if not m.neutral:
        raise NoNeutralPoints(f"{m.name} declares no neutral fixed points")
    return max(t * phi.value(m, p) for p in m.neutral)


def _scaled_induced(ip: InducedPotential, t: float) -> InducedPotential:
    lo = np.minimum(t * ip.lower, t * ip.upper)
    hi = np.maximum(t * ip.lower, t * ip.upper)
    return InducedPotential(
        values=t * ip.values, lower=lo, upper=hi,
        return_times=ip.return_times, hoelder=(abs(t) * ip.hoelder[0], ip.hoelder[1]),
        contraction_factors=ip.contraction_factors,
        variation_bound_constant=abs(t) * ip.variation_bound_constant,
        total_variation_bound=abs(t) * ip.total_variation_bound,
        diam_base=ip.diam_base,
    )


def _curve_point(s, m, ip1, phi, t, tol):
    ip = _scaled_induced(ip1, t)
    try:
        dirac = dirac_competitor(m, phi, t)
    except NoNeutralPoints:
        dirac = None
    induced = None
    err = 0.0
    try:
        g = gibbs_equilibrium(s, ip, tol)
        induced = g.pressure
        # variation error: bracket the root with per-branch lower/upper values;
        # when a one-sided root drops out, the curve there is the competitor
        osc = float(np.max(ip.upper - ip.lower, initial=0.0))
        for vals in (ip.lower, ip.upper):
            try:
                gb = gibbs_equilibrium(s, _replace_values(ip, vals), tol)
                side = gb.pressure
            except NoRoot:
                side = dirac if dirac is not None else induced - osc
            err = max(err, abs(side - induced))
        shift = g.truncation_error  # |dG/dp| >= 1 at the root, R >= 1
        err += (shift if math.isfinite(shift) else osc) + 10.0 * tol
    except NoRoot:
        induced = None
    if induced is None and dirac is None:
        return math.nan, math.inf, "error:NoRoot"
    if induced is None:
        return dirac, 0.0, "dirac"
    if dirac is None:
        return induced, err, "induced"
    if dirac > induced:
        return dirac, 0.0, "dirac"
    return induced, err, "induced"


def _replace_values(ip: InducedPotential, vals) -> InducedPotential:
    return InducedPotential(
        values=vals, lower=ip.lower, upper=ip.upper,
        return_times=ip.return_times, hoelder=ip.hoelder,
        contraction_factors=ip.contraction_factors,
        variation_bound_constant=ip.variation_bound_constant,
        total_variation_bound=ip.total_variation_bound,
        diam_base=ip.diam_base,
    )


def _max_threads():
    env = os.environ.get("EQSTATE_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def pressure_curve(s: InducingScheme, phi: Potential, t_grid,
                   tol: float = 1e-12) -> PressureCurve:
    """P(t phi) over the grid, with per-point error bars and one-sided slopes.

    Per-point failures are recorded in the status column and never abort
    the rest of the curve.  Points are independent; they are computed on a
    small thread pool (capped by EQSTATE_THREADS) and assembled in grid
    order, so the result is deterministic.
    """
    m = s.map
    t = np.asarray(sorted(t_grid), dtype=float)
    ip1 = induced_potential(m, s, phi)

    def work(tv):
        return _curve_point(s, m, ip1, phi, float(tv), tol)

    nthreads = _max_threads()
    if nthreads > 1 and len(t) > 4:
        with ThreadPoolExecutor(max_workers=nthreads) as ex:
            results = list(ex.map(work, t))
    else:
        results = [work(tv) for tv in t]
    vals = np.array([r[0] for r in results])
    errs = np.array([r[1] for r in results])
    status = tuple(r[2] for r in results)
    ls = np.full(len(t), math.nan)
    rs = np.full(len(t), math.nan)
    if len(t) > 1:
        d = np.diff(vals) / np.diff(t)
        ls[1:] = d
        rs[:-1] = d
    return PressureCurve(potential=phi.describe(), t=t, values=vals,
                         errors=errs, status=status,
                         left_slopes=ls, right_slopes=rs)


def phase_transition_scan(curve: PressureCurve, slope_tol: float):
    """Interior grid t where the one-sided slopes differ beyond tolerance.

    The threshold is slope_tol plus the adjacent per-point error bars
    (value units); returns the flagged t values.
    """
    if len(curve.t) < 3:
        raise OutOfRange("scan needs a grid with at least 3 points")
    flags = []
    for i in range(1, len(curve.t) - 1):
        gap = abs(curve.left_slopes[i] - curve.right_slopes[i])
        thr = slope_tol + curve.errors[i - 1] + curve.errors[i + 1]
        if math.isfinite(gap) and gap > thr:
            flags.append(float(curve.t[i]))
    return flags


# ---------------------------------------------------------------------------
# oscillation budget


@dataclass(frozen=True)
class OscillationBudget:
    value: float
    boundary: bool


def oscillation_budget(counts: LevelCounts, h: float) -> OscillationBudget:
    """delta(F)/2: the small-oscillation threshold for unique equilibria."""
    d = delta_F(counts, h)
    occupied = counts.occupied_levels()
    single = occupied is not None and len(occupied) == 1
    return OscillationBudget(value=0.5 * d, boundary=single or d == 0.0)


# ---------------------------------------------------------------------------
# Collet-Eckmann diagnostics


@dataclass(frozen=True)
class CEDiagnostic:
    c: float
    exponents: np.ndarray       # (n, (1/n) log |(f^n)'(f(0))|)
    liminf_estimate: float
    window: int
    hit_zero_derivative: bool
    heuristic: bool = True      # liminf is not computable from finite data


def collet_eckmann_diagnostic(c: float, N: int) -> CEDiagnostic:
    """Running expansion exponent along the critical orbit of x^2 + c.

    The liminf estimate is the running minimum over the trailing half of
    the samples; it is a declared heuristic, not a certification.  Raises
    OrbitEscaped (with the partial sequence attached) if the orbit leaves
    [-2, 2].
    """
    x = c  # f_c(0)
    logs = np.empty(N)
    hit_zero = False
    for n in range(N):
        if abs(x) > 2.0:
            partial = _ce_partial(logs[:n])
            raise OrbitEscaped(
                f"critical orbit of c={c:g} escaped [-2,2] at step {n}",
                partial=partial,
            )
        d = abs(2.0 * x)
        logs[n] = -math.inf if d == 0.0 else math.log(d)
        hit_zero = hit_zero or d == 0.0
        x = x * x + c
    expo = _ce_partial(logs)
    window = max(1, N // 2)
    tail = expo[-window:, 1]
    est = float(np.min(tail))
    return CEDiagnostic(c=c, exponents=expo, liminf_estimate=est,
                        window=window, hit_zero_derivative=hit_zero)


def _ce_partial(logs):
    n = len(logs)
    if n == 0:
        return np.empty((0, 2))
    sums = np.cumsum(logs)
    ns = np.arange(1, n + 1, dtype=float)
    return np.column_stack([ns, sums / ns])


# ---------------------------------------------------------------------------
# appendix inequality oracles


@dataclass(frozen=True)
class SequencePair:
    """a: probability vector; beta: positive summable sequence (finite tables)."""

    a: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.beta, dtype=float)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "beta", b)
        if len(a) != len(b):
            raise OutOfRange("sequence pair lengths differ")
        if np.any(a < 0) or abs(a.sum() - 1.0) > 1e-9:
            raise OutOfRange("a must be a probability vector")
        if np.any(b <= 0):
            raise OutOfRange("beta must be strictly positive")


@dataclass(frozen=True)
class LogSumReport:
    lhs: float
    rhs: float
    slack: float
    equality: bool


def log_sum_check(p: SequencePair) -> LogSumReport:
    """sum a_n log(beta_n / a_n) <= log sum beta_n, equality iff proportional."""
    a, b = p.a, p.beta
    nz = a > 0
    lhs = float(np.sum(a[nz] * np.log(b[nz] / a[nz])))
    total = float(np.sum(b))
    rhs = math.log(total)
    prop = b / total
    equality = bool(np.max(np.abs(a - prop)) <= 1e-12)
    return LogSumReport(lhs=lhs, rhs=rhs, slack=rhs - lhs, equality=equality)


@dataclass(frozen=True)
class EntropyRatioReport:
    lhs: float
    rhs: float
    holds: bool


def entropy_ratio_check(a) -> EntropyRatioReport:
    """sum H(a_n) <= 9 sum log(n) a_n + 40 for subprobability sequences."""
    a = np.asarray(a, dtype=float)
    if np.any(a < 0) or a.sum() > 1.0 + 1e-9:
        raise OutOfRange("need a_n >= 0 with sum <= 1")
    lhs = float(np.sum(_entropy_arr(np.minimum(a, 1.0))))
    ns = np.arange(1, len(a) + 1, dtype=float)
    rhs = 9.0 * float(np.sum(np.log(ns) * a)) + 40.0
    return EntropyRatioReport(lhs=lhs, rhs=rhs, holds=lhs <= rhs + 1e-9)


def _geometric_family(r):
    theta = 1.0 - 1.0 / r
    if theta <= 0:
        return np.array([1.0])
    horizon = int(max(64, 45.0 * r))
    n = np.arange(1, horizon + 1)
    a = (1.0 - theta) * theta ** (n - 1)
    return a


def _uniform_block_family(r):
    k = max(1, int(math.ceil(2 * r - 1)))
    return np.full(k, 1.0 / k)


def _heavy_tail_family(r, horizon=200_000):
    n = np.arange(1, horizon + 1, dtype=float)
    logn = np.log(n)

    def mean(s):
        w = np.exp(-s * logn)
        return float(np.dot(n, w) / w.sum())

    lo, hi = 1.01, 6.0
    if mean(lo) < r:
        # even the flattest admissible tail cannot reach this mean
        s = lo
    else:
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if mean(mid) > r:
                lo = mid
            else:
                hi = mid
        s = 0.5 * (lo + hi)
    w = np.exp(-s * logn)
    return w / w.sum()


_FAMILIES = {
    "geometric": _geometric_family,
    "uniform_block": _uniform_block_family,
    "heavy_tail": _heavy_tail_family,
}


def ratio_decay_probe(r_grid, families=("geometric", "heavy_tail", "uniform_block")):
    """For each r: max over families of sum H(a_n) / sum n a_n at mean >= r.

    Rows (r, ratio, per-family dict); the ratio must decay to 0 as r grows.
    """
    rows = []
    for r in r_grid:
        per = {}
        for name in families:
            a = _FAMILIES[name](float(r))
            num = float(np.sum(_entropy_arr(np.minimum(a, 1.0))))
            den = float(np.dot(np.arange(1, len(a) + 1, dtype=float), a))
            per[name] = num / den
        rows.append((float(r), max(per.values()), per))
    return rows


# ---------------------------------------------------------------------------
# verification runner (CLI `analysis verify`)


def run_verification(n_pairs=100_000, n_prop=1_000, n_entropy=10_000,
                     max_len=10_000, seed=20240501, quick=False):
    """Randomized oracle suites; returns a report dict with a violation count."""
    if quick:
        n_pairs, n_prop, n_entropy, max_len = 2_000, 50, 200, 1_000
    rng = np.random.Generator(np.random.Philox(seed))
    violations = []

    slack_min = math.inf
    eq_errors = 0
    for i in range(n_pairs):
        k = int(rng.integers(1, 12))
        a = rng.random(k) + 1e-12
        a /= a.sum()
        beta = rng.random(k) * 10 + 1e-9
        rep = log_sum_check(SequencePair(a, beta))
        slack_min = min(slack_min, rep.slack)
        if rep.slack < -1e-12:
            violations.append(f"log_sum slack {rep.slack} at pair {i}")
        if rep.equality and np.max(np.abs(a - beta / beta.sum())) > 1e-12:
            eq_errors += 1
    for i in range(n_prop):
        k = int(rng.integers(1, 12))
        beta = rng.random(k) * 10 + 1e-9
        a = beta / beta.sum()
        rep = log_sum_check(SequencePair(a, beta))
        if not rep.equality or rep.slack > 1e-10:
            violations.append(f"proportional pair {i} not detected as equality")
            eq_errors += 1

    ratio_fails = 0
    for i in range(n_entropy):
        k = int(rng.integers(1, max_len + 1))
        a = rng.random(k)
        a /= a.sum() / min(1.0, rng.random() + 0.5)
        a = np.minimum(a, 1.0)
        rep = entropy_ratio_check(a)
        if not rep.holds:
            ratio_fails += 1
            violations.append(f"entropy_ratio violated at sequence {i}")

    probe = ratio_decay_probe([2, 5, 10, 30, 100])
    ratios = [row[1] for row in probe]
    if any(b > a + 1e-9 for a, b in zip(ratios, ratios[1:])):
        violations.append("ratio_decay_probe not decreasing")
    if ratios[-1] >= 0.2:
        violations.append(f"ratio_decay_probe at r=100 is {ratios[-1]:.3f} >= 0.2")

    return {
        "log_sum_pairs": n_pairs,
        "log_sum_min_slack": slack_min,
        "proportional_pairs": n_prop,
        "equality_errors": eq_errors,
        "entropy_ratio_sequences": n_entropy,
        "entropy_ratio_failures": ratio_fails,
        "ratio_decay": [(r, v) for r, v, _ in probe],
        "violations": violations,
    }
