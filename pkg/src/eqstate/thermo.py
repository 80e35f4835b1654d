"""Pressure equation, maximal-entropy and Gibbs weights, projections, tails.

Everything is driven by level data: enumerated (n, weight-sum) tables from
a scheme, or closed-form level-count generators.  The pressure root is the
unique s with sum_n W_n e^{-s n} = 1, found by bisection (the series is
strictly decreasing in s); infinite closed forms are summed adaptively with
certified geometric tails, so roots are certified rather than silently
truncated.  Horizon-truncated schemes carry their tail bound in
``truncation_error``.

The zero-potential route and the Gibbs route share one solver, so
``gibbs_equilibrium`` with a zero potential reproduces ``pressure_root``
and ``mme`` bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AtCriticalOrBoundary,
    DivergentEntropy,
    InfiniteMeanReturn,
    NoFiniteRoot,
    NoRoot,
    OrbitHitsCritical,
    OutOfRange,
)
from .inducing import InducingScheme, LevelCounts, level_counts
from .maps import MapSpec

__all__ = [
    "entropy_term",
    "Potential",
    "constant_potential",
    "geometric_potential",
    "callable_potential",
    "InducedPotential",
    "induced_potential",
    "MassDistribution",
    "PressureReport",
    "pressure_root",
    "mme",
    "total_mass",
    "mean_return",
    "bernoulli_entropy",
    "normalized_entropy",
    "delta_F",
    "gibbs_equilibrium",
    "truncated_gurevich",
    "project_integral",
    "project_entropy",
    "EmpiricalMeasure",
    "sample_original_measure",
    "TailReport",
    "tail_analysis",
    "fat_perturbation",
]


def entropy_term(x: float) -> float:
    """H(x) = x log(1/x), with H(0) = H(1) = 0."""
    if x < 0 or x > 1 + 1e-15:
        raise OutOfRange(f"entropy_term needs x in [0, 1], got {x!r}")
    if x <= 0 or x >= 1:
        return 0.0
    return -x * math.log(x)


def _entropy_arr(w):
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    pos = (w > 0) & (w < 1)
    out[pos] = -w[pos] * np.log(w[pos])
    return out


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class Potential:
    """Observable on the phase space; 'geometric' is -t log|f'|."""

    kind: str
    c: float = 0.0
    t: float = 1.0
    fn: object = field(default=None, compare=False)
    hoelder: tuple = None

    def value(self, m: MapSpec, x: float) -> float:
        if self.kind == "constant":
            return self.c
        if self.kind == "geometric":
            return -self.t * math.log(abs(_deriv_closure(m, x)))
        return float(self.fn(x))

    def describe(self) -> str:
        if self.kind == "constant":
            return f"constant:c={self.c:g}"
        if self.kind == "geometric":
            return f"geometric:t={self.t:g}"
        return "callable"


def constant_potential(c: float) -> Potential:
    return Potential("constant", c=float(c), hoelder=(0.0, 1.0))


def geometric_potential(t: float = 1.0, hoelder=None) -> Potential:
    return Potential("geometric", t=float(t), hoelder=hoelder)


def callable_potential(fn, hoelder=None) -> Potential:
    return Potential("callable", fn=fn, hoelder=hoelder)


def _deriv_closure(m: MapSpec, x: float) -> float:
    """Derivative at x, using the right-adjacent branch at boundary points."""
    x = m.space.wrap(x)
    i = m.branch_index(x)
    if i >= 0:
        return float(m.branches[i].df(x))
    for b in m.branches:
        if abs(b.lo - x) <= 1e-14:
            return float(b.df(b.lo))
    for b in m.branches:
        if abs(b.hi - x) <= 1e-14:
            return float(b.df(b.hi))
    raise AtCriticalOrBoundary(f"derivative undefined at {x!r}")


def _hoelder_data(phi: Potential, m: MapSpec):
    """(C, gamma) for phi on m: supplied, or estimated from samples."""
    if phi.hoelder is not None:
        return (float(phi.hoelder[0]), float(phi.hoelder[1]))
    if phi.kind == "constant":
        return (0.0, 1.0)
    gamma = 1.0
    if phi.kind == "geometric":
        alphas = [b.params["alpha"] for b in m.branches if b.kind == "lsv_left"]
        if alphas:
            gamma = min(1.0, min(alphas))
    # deterministic two-scale sampling of the Hoelder quotient per branch
    C = 0.0
    for b in m.branches:
        L = b.hi - b.lo
        xs = b.lo + L * (np.geomspace(1e-9, 0.5, 40))
        xs = np.concatenate([xs, b.hi - L * np.geomspace(1e-9, 0.49, 40)])
        for h in (1e-7 * L, 1e-3 * L):
            a = np.clip(xs, b.lo + 1e-12 * L, b.hi - h - 1e-12 * L)
            va = np.array([phi.value(m, v) for v in a])
            vb = np.array([phi.value(m, v + h) for v in a])
            q = np.abs(vb - va) / h ** gamma
            C = max(C, float(np.max(q)))
    return (2.0 * C, gamma)


# ---------------------------------------------------------------------------
# induced potentials


@dataclass(frozen=True)
class InducedPotential:
    """Per-branch values of the lifted potential phi-bar(x) = sum phi(f^j x)."""

    values: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    return_times: np.ndarray
    hoelder: tuple
    contraction_factors: np.ndarray
    variation_bound_constant: float
    total_variation_bound: float
    diam_base: float

    @property
    def v1_bound(self) -> float:
        """Bound on the first variation of phi-bar."""
        g = self.hoelder[1]
        return self.variation_bound_constant * self.diam_base ** g


def _marker_orbit_sum(m: MapSpec, phi: Potential, chain, x0: float,
                      branch_label: str):
    sp = m.space
    y = float(x0)
    acc = 0.0
    for bi in chain:
        yy = sp.wrap(y) if sp.circle else y
        if yy in m.critical:
            raise OrbitHitsCritical(
                f"orbit of {branch_label} meets the critical set at {yy!r}"
            )
        br = m.branches[bi]
        yy = min(max(yy, br.lo), br.hi)
        acc += phi.value(m, yy)
        y = float(br.f(yy))
    return acc


def induced_potential(m: MapSpec, s: InducingScheme, phi: Potential) -> InducedPotential:
    """phi-bar at every branch marker, with variation bookkeeping.

    lower/upper are per-branch brackets of phi-bar sampled at the marker and
    slightly-inset cylinder endpoints; the variation constant S combines the
    Hoelder data of phi with the scheme's measured contraction factors, so
    that V_n(phi-bar) <= S * diam(B)^gamma * a_n^gamma.
    """
    C, gamma = _hoelder_data(phi, m)
    R = s.return_times()
    nb = len(s.branches)
    vals = np.empty(nb)
    lows = np.empty(nb)
    ups = np.empty(nb)
    nmax = int(R.max()) if nb else 0
    # a_k * diam(B) >= diam(f^{n-k}(P)) for every branch with R = n >= k
    adiam = np.zeros(nmax + 1)
    for i, b in enumerate(s.branches):
        label = f"branch {i} (R={b.return_time})"
        eps = 1e-3 * (b.hi - b.lo)
        samples = [
            _marker_orbit_sum(m, phi, b.chain, b.marker, label),
            _marker_orbit_sum(m, phi, b.chain, b.lo + eps, label),
            _marker_orbit_sum(m, phi, b.chain, b.hi - eps, label),
        ]
        vals[i] = samples[0]
        lows[i] = min(samples)
        ups[i] = max(samples)
        # forward diameters along the chain
        y1, y2 = b.lo, b.hi
        n = b.return_time
        sp = m.space
        for j in range(n):
            k = n - j
            adiam[k] = max(adiam[k], abs(y2 - y1))
            br = m.branches[b.chain[j]]
            z1 = sp.wrap(y1) if sp.circle else y1
            z2 = sp.wrap(y2) if sp.circle else y2
            z1 = min(max(z1, br.lo), br.hi)
            z2 = min(max(z2, br.lo), br.hi)
            y1, y2 = float(br.f(z1)), float(br.f(z2))
    diam = s.diam_base
    a = adiam[1:] / diam if diam > 0 else adiam[1:]
    S = C * float(np.sum(a ** gamma))
    if not s.exhausted and len(a) >= 2 and a[-2] > 0:
        r = min(a[-1] / a[-2], 0.999) ** gamma
        S += C * (a[-1] ** gamma) * r / (1 - r)
    return InducedPotential(
        values=vals, lower=lows, upper=ups, return_times=R,
        hoelder=(C, gamma), contraction_factors=a,
        variation_bound_constant=S,
        total_variation_bound=S * S * diam ** gamma if C > 0 else 0.0,
        diam_base=diam,
    )


# ---------------------------------------------------------------------------
# series engine

_SUM_CAP = 200_000


def _adaptive_sum(counts: LevelCounts, term, rtol=1e-16):
    """Sum term(n, count(n)) over the support with a certified/observed tail.

    Finite support sums exactly.  Infinite support sums until the running
    geometric tail estimate drops below rtol * |acc|; raises
    DivergentEntropy when terms stop decaying before the cap.
    """
    if counts.support != "infinite":
        acc = 0.0
        for n, c in counts.table:
            if c > 0:
                acc += term(n, c)
        return acc
    acc = 0.0
    prev = None
    ratio = 0.0
    n = 0
    while n < _SUM_CAP:
        n += 1
        t = term(n, counts.count(n))
        acc += t
        at = abs(t)
        if prev is not None and prev > 0:
            ratio = at / prev
        prev = at
        if n >= 8 and at <= rtol * max(abs(acc), 1e-300):
            return acc
        if n >= 8 and ratio < 0.999 and at * ratio / (1 - ratio) <= rtol * max(abs(acc), 1e-300):
            return acc
    raise DivergentEntropy(
        f"series failed its ratio test within {_SUM_CAP} terms (last ratio {ratio:.6f})"
    )


def _series_G(levels, s, early_above=None):
    """sum W_n e^{-s n} over an enumerated (n, W) table, optional early exit."""
    acc = 0.0
    for n, W in levels:
        acc += W * math.exp(-s * n)
        if early_above is not None and acc > early_above:
            return acc
    return acc


def _closed_G(counts: LevelCounts, s, early_above=None):
    """sum count(n) e^{-sn} for closed forms, in log space, adaptive tail."""
    acc = 0.0
    prev = None
    ratio = 0.0
    n = 0
    while n < _SUM_CAP:
        n += 1
        t = math.exp(counts.log_count(n) - s * n)
        acc += t
        if early_above is not None and acc > early_above:
            return acc
        if prev is not None and prev > 0:
            ratio = t / prev
        prev = t
        if n >= 8 and t <= 1e-16 * max(acc, 1e-300):
            return acc
        if n >= 8 and ratio < 0.999 and t * ratio / (1 - ratio) <= 1e-16 * max(acc, 1e-300):
            return acc
    raise NoRoot(f"series at s={s!r} did not converge within {_SUM_CAP} terms")


class _Source:
    """Uniform view of the pressure series for both solver routes."""

    def __init__(self, levels, support, rate, prefactor, counts=None,
                 ratio_model=None):
        self.levels = levels          # enumerated (n, W_n) with W_n > 0
        self.support = support        # finite | truncated | infinite
        self.rate = rate
        self.prefactor = prefactor
        self.counts = counts          # LevelCounts for infinite support
        self.ratio_model = ratio_model  # (W_last, ratio_hat) for weighted tails

    @staticmethod
    def from_counts(counts: LevelCounts) -> "_Source":
        if counts.support == "infinite":
            return _Source(None, "infinite", counts.rate, counts.prefactor, counts)
        levels = [(n, float(c)) for n, c in counts.table if c > 0]
        return _Source(levels, counts.support, counts.rate, counts.prefactor)

    @staticmethod
    def from_scheme_potential(s: InducingScheme, values: np.ndarray) -> "_Source":
        R = s.return_times()
        levels = []
        for n in sorted(set(int(r) for r in R)):
            W = 0.0
            for i in np.nonzero(R == n)[0]:
                W += math.exp(values[i])
            levels.append((n, W))
        if not all(map(math.isfinite, (w for _, w in levels))):
            raise NoFiniteRoot("induced potential produces non-finite level weights")
        table = tuple(levels)
        rate = 0.0
        for n, W in table:
            if W > 1:
                rate = max(rate, math.log(W) / n)
        ratio_model = None
        if len(table) >= 4:
            # observed level-weight decay over the trailing half (extrapolated
            # tail estimate for horizon-truncated schemes)
            half = table[len(table) // 2:]
            ratios = [b[1] / a[1] for a, b in zip(half, half[1:])
                      if a[1] > 0 and b[0] == a[0] + 1]
            if ratios:
                ratio_model = (table[-1][1], max(ratios))
        return _Source(list(table), "finite" if s.exhausted else "truncated",
                       rate, 1.0, ratio_model=ratio_model)

    def G(self, s, early_above=None):
        if self.support == "infinite":
            return _closed_G(self.counts, s, early_above)
        return _series_G(self.levels, s, early_above)

    def tail_bound(self, s) -> float:
        """Bound/estimate of the neglected part of the series at parameter s."""
        if self.support == "finite":
            return 0.0
        if self.support == "infinite":
            return 0.0  # adaptive summation already certified to ~1e-16
        N = self.levels[-1][0] if self.levels else 0
        if self.ratio_model is not None:
            W_last, rhat = self.ratio_model
            q = min(rhat, 1.0) * math.exp(-s)
            if q >= 1.0:
                return math.inf
            return W_last * q / (1.0 - q)
        q = self.rate - s
        if q >= -1e-300:
            return math.inf
        eq = math.exp(q)
        return self.prefactor * eq ** (N + 1) / (1.0 - eq)

    def min_level(self):
        if self.support == "infinite":
            return 1
        return self.levels[0][0]


def _solve_pressure(src: _Source, tol: float):
    """Root of G(s) = 1; returns (root, residual, bracket_lo, bracket_hi)."""
    if src.support == "infinite":
        # G -> inf at the abscissa of convergence, so a root always exists
        lo = src.rate + 1.0
        for _ in range(80):
            if src.G(lo, early_above=2.0) > 1.0:
                break
            lo = src.rate + 0.5 * (lo - src.rate)
        else:
            raise NoRoot("series never exceeds 1 above its abscissa")
    else:
        lo = src.rate
        if src.G(lo, early_above=2.0) <= 1.0:
            if src.support == "truncated":
                raise NoRoot(
                    "truncated series stays below 1 down to its growth rate; "
                    "the enumerated horizon is insufficient"
                )
            # finite support: expand downward until the series exceeds 1
            step = 1.0
            for _ in range(200):
                lo -= step
                step *= 2.0
                if src.G(lo, early_above=2.0) > 1.0:
                    break
            else:
                raise NoRoot("series never exceeds 1 (degenerate counts)")
    hi = lo + 1.0
    for _ in range(200):
        if src.G(hi) < 1.0:
            break
        hi = lo + 2.0 * (hi - lo)
    else:
        raise NoRoot("series never drops below 1 (divergent weights)")
    a, b = lo, hi
    mid = 0.5 * (a + b)
    for _ in range(200):
        mid = 0.5 * (a + b)
        g = src.G(mid)
        if g > 1.0:
            a = mid
        else:
            b = mid
        if b - a <= 1e-15 * max(1.0, abs(mid)) and abs(g - 1.0) <= tol:
            break
    res = abs(src.G(mid) - 1.0)
    if res > tol:
        raise NoRoot(f"bisection stalled with residual {res:.3e} > tol {tol:.3e}")
    return mid, res, lo, hi


# ---------------------------------------------------------------------------
# reports and distributions


@dataclass(frozen=True)
class PressureReport:
    h: float
    mean_return: float
    delta_f: float
    tail_rate: float
    truncation_error: float
    residual: float
    delta_f_boundary: bool
    support: str
    tol: float
    bracket: tuple

    def to_json(self) -> dict:
        return {
            "h": self.h,
            "mean_return": self.mean_return,
            "delta_f": self.delta_f,
            "tail_rate": self.tail_rate,
            "truncation_error": self.truncation_error,
            "residual": self.residual,
            "delta_f_boundary": self.delta_f_boundary,
            "support": self.support,
            "tol": self.tol,
            "bracket": list(self.bracket),
        }


@dataclass(frozen=True)
class MassDistribution:
    """Branch weights of an F-invariant Bernoulli measure.

    Either per-branch (`branch_weights`, aligned with a scheme's branch
    order) or level-constant closed form (`weight_fn` per branch at level
    n, with `counts` giving the level structure).  `residual` records
    |1 - total mass|; horizon-truncated schemes keep their raw weights so
    algebraic identities (H = h * mean return) survive truncation.
    """

    counts: LevelCounts
    weight_fn: object = field(default=None, compare=False)
    branch_weights: np.ndarray = None
    branch_times: np.ndarray = None
    residual: float = 0.0

    @property
    def enumerated(self) -> bool:
        return self.branch_weights is not None

    def level_weight(self, n: int) -> float:
        return float(self.weight_fn(n))


def total_mass(m: MassDistribution) -> float:
    if m.enumerated:
        return float(np.sum(m.branch_weights))
    return _adaptive_sum(m.counts, lambda n, c: c * m.level_weight(n))


def mean_return(m: MassDistribution) -> float:
    """sum m(P) R(P); raises InfiniteMeanReturn when the series diverges."""
    if m.enumerated:
        return float(np.dot(m.branch_weights, m.branch_times))
    try:
        return _adaptive_sum(m.counts, lambda n, c: n * c * m.level_weight(n))
    except DivergentEntropy as e:
        raise InfiniteMeanReturn(str(e)) from None


def bernoulli_entropy(m: MassDistribution) -> float:
    """sum_P H(m(P)) over branches."""
    if m.enumerated:
        return float(np.sum(_entropy_arr(m.branch_weights)))
    return _adaptive_sum(
        m.counts, lambda n, c: c * entropy_term(min(m.level_weight(n), 1.0))
    )


def normalized_entropy(m: MassDistribution) -> float:
    """Entropy per unit return time, H_m / int R dm (Abramov form)."""
    mr = mean_return(m)
    if not math.isfinite(mr) or mr <= 0:
        raise InfiniteMeanReturn("normalized entropy needs finite mean return")
    return bernoulli_entropy(m) / mr


def project_entropy(m: MassDistribution) -> float:
    """Entropy of the projected measure: h = H_m / int R dm."""
    return normalized_entropy(m)


def _level_masses(counts: LevelCounts, h: float, up_to=None):
    if counts.support == "infinite":
        out = []
        n = 0
        while True:
            n += 1
            a = counts.count(n) * math.exp(-h * n)
            out.append((n, a))
            if n >= 8 and a < 1e-20:
                break
            if up_to and n >= up_to:
                break
            if n > _SUM_CAP:
                break
        return out
    return [(n, c * math.exp(-h * n)) for n, c in counts.table if c > 0]


def pressure_root(counts: LevelCounts, tol: float = 1e-12) -> PressureReport:
    """Solve sum_n #{R=n} e^{-h n} = 1 with certified truncation error."""
    src = _Source.from_counts(counts)
    h, res, blo, bhi = _solve_pressure(src, tol)
    trunc = src.tail_bound(h)
    occupied = counts.occupied_levels()
    single = occupied is not None and len(occupied) == 1
    if counts.support == "truncated" and h - counts.rate < 1e-9:
        mean = math.inf
        delta = math.nan
    else:
        try:
            mean = _adaptive_sum(counts, lambda n, c: n * c * math.exp(-h * n))
            delta = _adaptive_sum(
                counts,
                lambda n, c: entropy_term(min(c * math.exp(-h * n), 1.0)),
            ) / mean
        except DivergentEntropy:
            mean = math.inf
            delta = math.nan
    # paper asserts delta(F) in the open interval (0, h); single-level schemes
    # attain 0 and constant counts attain h, so both ends are flagged, not errors
    boundary = single or delta == 0.0 or (math.isfinite(delta) and delta >= h - 1e-12)
    return PressureReport(
        h=h, mean_return=mean, delta_f=delta, tail_rate=counts.rate,
        truncation_error=trunc, residual=res,
        delta_f_boundary=boundary,
        support=counts.support, tol=tol, bracket=(blo, bhi),
    )


def mme(counts: LevelCounts, h: float, scheme: InducingScheme = None) -> MassDistribution:
    """Maximal-entropy weights: every level-n branch gets e^{-h n}."""
    if scheme is not None:
        R = scheme.return_times()
        w = np.exp(-h * R)
        resid = abs(1.0 - float(np.sum(w)))
        return MassDistribution(counts=counts, branch_weights=w,
                                branch_times=R.astype(float), residual=resid)
    if counts.support in ("finite", "truncated"):
        ns = np.array([n for n, c in counts.table if c > 0], dtype=float)
        cs = np.array([c for n, c in counts.table if c > 0], dtype=float)
        w = np.repeat(np.exp(-h * ns), cs.astype(int))
        times = np.repeat(ns, cs.astype(int))
        resid = abs(1.0 - float(np.sum(w)))
        return MassDistribution(counts=counts, branch_weights=w,
                                branch_times=times, residual=resid)
    wf = lambda n: math.exp(-h * n)
    resid = abs(1.0 - _adaptive_sum(counts, lambda n, c: c * math.exp(-h * n)))
    return MassDistribution(counts=counts, weight_fn=wf, residual=resid)


def delta_F(counts: LevelCounts, h: float) -> float:
    """(1 / int R dnu0) * sum_n H(nu0({R=n}))."""
    mean = _adaptive_sum(counts, lambda n, c: n * c * math.exp(-h * n))
    if not math.isfinite(mean) or mean <= 0:
        raise InfiniteMeanReturn("delta(F) needs a finite mean return")
    num = _adaptive_sum(
        counts, lambda n, c: entropy_term(min(c * math.exp(-h * n), 1.0))
    )
    return num / mean


# ---------------------------------------------------------------------------
# Gibbs equilibrium for induced potentials


@dataclass(frozen=True)
class GibbsResult:
    pressure: float
    mass: MassDistribution
    residual: float
    truncation_error: float
    bracket: tuple

    def to_json(self):
        return {
            "pressure": self.pressure,
            "residual": self.residual,
            "truncation_error": self.truncation_error,
            "bracket": list(self.bracket),
        }


def gibbs_equilibrium(s: InducingScheme, phibar: InducedPotential,
                      tol: float = 1e-12) -> GibbsResult:
    """p with log sum_P e^{phibar(x_P) - p R(P)} = 0 and its Gibbs weights.

    With phibar identically zero this reproduces (pressure_root, mme)
    bit for bit: the level sums collapse to the integer counts and the
    same bisection runs.
    """
    src = _Source.from_scheme_potential(s, phibar.values)
    p, res, blo, bhi = _solve_pressure(src, tol)
    R = s.return_times()
    w = np.exp(phibar.values - p * R)
    resid = abs(1.0 - float(np.sum(w)))
    mass = MassDistribution(counts=level_counts(s), branch_weights=w,
                            branch_times=R.astype(float), residual=resid)
    return GibbsResult(pressure=p, mass=mass, residual=res,
                       truncation_error=src.tail_bound(p), bracket=(blo, bhi))


def truncated_gurevich(s: InducingScheme, phibar: InducedPotential, n: int,
                       tol: float = 1e-12) -> float:
    """Pressure of the compact sub-alphabet {R <= n} (one-step full shift).

    Returns -inf when no branch has return time <= n.  Non-decreasing in n
    and bounded above by the full Gibbs root.
    """
    R = s.return_times()
    keep = np.nonzero(R <= n)[0]
    if len(keep) == 0:
        return -math.inf
    levels = []
    for nn in sorted(set(int(R[i]) for i in keep)):
        W = 0.0
        for i in keep:
            if R[i] == nn:
                W += math.exp(phibar.values[i])
        levels.append((nn, W))
    src = _Source(levels, "finite", 0.0, 1.0)
    p, _, _, _ = _solve_pressure(src, tol)
    return p


# ---------------------------------------------------------------------------
# projections and sampling


def project_integral(m: MassDistribution, phibar: InducedPotential) -> float:
    """int phi dmu = sum m(P) phibar(x_P) / sum m(P) R(P)."""
    if not m.enumerated:
        raise OutOfRange("project_integral needs enumerated branch weights")
    w = m.branch_weights
    denom = float(np.dot(w, m.branch_times))
    if not math.isfinite(denom) or denom <= 0:
        raise InfiniteMeanReturn("projection needs a finite positive mean return")
    return float(np.dot(w, phibar.values)) / denom


@dataclass(frozen=True)
class EmpiricalMeasure:
    points: np.ndarray
    weights: np.ndarray
    draw_counts: np.ndarray
    seed: int

    def integrate(self, fn) -> float:
        vals = np.array([fn(x) for x in self.points])
        return float(np.dot(self.weights, vals))


def sample_original_measure(s: InducingScheme, m: MassDistribution,
                            n_samples: int, seed: int) -> EmpiricalMeasure:
    """Spread of the induced measure along return blocks, sampled by branch.

    Draws branches i.i.d. from m (normalized), emits each marker orbit
    segment {x_P, ..., f^{R-1} x_P} with one unit of weight per point, and
    normalizes the total.  Deterministic given the seed (Philox counter
    generator).
    """
    if not m.enumerated:
        raise OutOfRange("sampling needs enumerated branch weights")
    rng = np.random.Generator(np.random.Philox(seed))
    probs = np.asarray(m.branch_weights, dtype=float)
    probs = probs / probs.sum()
    draws = rng.choice(len(probs), size=int(n_samples), p=probs)
    cnt = np.bincount(draws, minlength=len(probs))
    segs = []
    wts = []
    sp = s.map.space
    for i, b in enumerate(s.branches):
        if cnt[i] == 0:
            continue
        pts = np.empty(b.return_time)
        y = b.marker
        for j, bi in enumerate(b.chain):
            br = s.map.branches[bi]
            yy = sp.wrap(y) if sp.circle else y
            yy = min(max(yy, br.lo), br.hi)
            pts[j] = yy
            y = float(br.f(yy))
        segs.append(np.tile(pts, cnt[i]))
        wts.append(np.full(cnt[i] * b.return_time, 1.0))
    points = np.concatenate(segs) if segs else np.empty(0)
    weights = np.concatenate(wts) if wts else np.empty(0)
    weights = weights / weights.sum() if len(weights) else weights
    return EmpiricalMeasure(points=points, weights=weights,
                            draw_counts=cnt, seed=int(seed))


# ---------------------------------------------------------------------------
# tails


@dataclass(frozen=True)
class TailReport:
    rate: float
    pressure: float
    certificate: bool
    epsilon: float
    constant: float
    finite_support: bool
    max_level: int

    def bound(self, n: int) -> float:
        """Certified upper bound on sum_{k>n} k #{R=k} e^{-h k}."""
        if self.finite_support:
            return 0.0 if n >= self.max_level else self.constant
        if not self.certificate:
            return math.inf
        return self.constant * math.exp(-0.5 * self.epsilon * n)

    def to_json(self):
        return {
            "rate": None if self.finite_support else self.rate,
            "pressure": self.pressure,
            "certificate": self.certificate,
            "epsilon": self.epsilon,
            "constant": self.constant,
            "finite_support": self.finite_support,
        }


def tail_analysis(counts: LevelCounts, h: float) -> TailReport:
    """Exponential-tails certificate: granted iff the growth rate sits below h.

    When granted, sum_{k>n} k #{R=k} e^{-hk} <= C e^{-eps n / 2} for every
    n >= 0, with eps = h - rate and C explicit (no asymptotic caveats):
    k e^{-eps k} <= (2/(e eps)) e^{-eps k/2} pointwise, then a geometric sum.
    """
    if counts.support == "finite":
        # tails vanish identically beyond the last level
        gross = sum(k * c * math.exp(-h * k) for k, c in counts.table if c > 0)
        return TailReport(rate=-math.inf, pressure=h, certificate=True,
                          epsilon=math.inf, constant=gross,
                          finite_support=True, max_level=counts.max_level)
    eps = h - counts.rate
    if eps <= 1e-12:
        return TailReport(rate=counts.rate, pressure=h, certificate=False,
                          epsilon=0.0, constant=math.inf,
                          finite_support=False, max_level=0)
    C = counts.prefactor * (2.0 / (math.e * eps)) * math.exp(-0.5 * eps) \
        / (1.0 - math.exp(-0.5 * eps))
    return TailReport(rate=counts.rate, pressure=h, certificate=True,
                      epsilon=eps, constant=C, finite_support=False,
                      max_level=0)


# ---------------------------------------------------------------------------
# fat-support perturbation


def fat_perturbation(m: MassDistribution, counts: LevelCounts,
                     gamma: float) -> MassDistribution:
    """(1-gamma) m + gamma m0, with m0 the dyadic spread over occupied levels.

    m0 gives level n_j total mass 2^{-n_j} / W, split evenly over its
    branches, where W = sum_j 2^{-n_j} over occupied levels; every branch
    weight becomes strictly positive and the mean return obeys
    (1-gamma) old + 2 gamma for all-levels-occupied structures.
    """
    if not (0.0 < gamma < 1.0):
        raise OutOfRange("gamma must lie in (0, 1)")
    occupied = counts.occupied_levels()
    if occupied is None:
        W = 1.0  # sum_{n>=1} 2^{-n}
    else:
        W = sum(2.0 ** (-n) for n in occupied)
    if m.enumerated:
        times = m.branch_times
        m0 = np.array([
            2.0 ** (-n) / (W * counts.count(int(n))) for n in times
        ])
        w = (1.0 - gamma) * m.branch_weights + gamma * m0
        resid = abs(1.0 - float(np.sum(w)))
        return MassDistribution(counts=counts, branch_weights=w,
                                branch_times=times, residual=resid)
    wf = m.weight_fn
    new_fn = lambda n: (1.0 - gamma) * wf(n) + gamma * 2.0 ** (-n) / (W * counts.count(n))
    resid = abs(1.0 - _adaptive_sum(counts, lambda n, c: c * new_fn(n)))
    return MassDistribution(counts=counts, weight_fn=new_fn, residual=resid)
