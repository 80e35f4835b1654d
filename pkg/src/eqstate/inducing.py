"""Full induced Markov maps by exact first-return combinatorics.

The construction expands forward images of the base through the branch
partition, emitting a scheme branch whenever an image covers the base
and continuing with the uncovered remainders.  This is exact (interval
endpoints only, no orbit sampling) and restricted to Markov-compatible
bases: any image that partially overlaps the base aborts the build.

Level counts #{R=n} are the generating data for the pressure equation;
closed-form generators for the worked families are provided alongside
enumerated counts so series tails can be certified, not just truncated.
"""

from __future__ import annotations

import json
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import NotMarkovCompatible, ToleranceFailure, UnknownGenerator
from .maps import MapSpec, from_json as map_from_json, to_json as map_to_json

__all__ = [
    "SchemeBranch",
    "InducingScheme",
    "LevelCounts",
    "CylinderRefinement",
    "first_return_scheme",
    "level_counts",
    "analytic_counts",
    "refine",
    "save_scheme",
    "load_scheme",
]

_MAX_PIECES = 200_000


@dataclass(frozen=True)
class SchemeBranch:
    index: int
    lo: float
    hi: float
    return_time: int
    chain: tuple
    marker: float


@dataclass(frozen=True)
class InducingScheme:
    map: MapSpec
    base_lo: float
    base_hi: float
    branches: tuple
    complete_up_to: int
    exhausted: bool
    tol: float

    @property
    def base(self):
        return (self.base_lo, self.base_hi)

    @property
    def diam_base(self) -> float:
        return self.base_hi - self.base_lo

    def return_times(self) -> np.ndarray:
        return np.array([b.return_time for b in self.branches], dtype=int)

    def markers(self) -> np.ndarray:
        return np.array([b.marker for b in self.branches])

    def __len__(self):
        return len(self.branches)


def _chain_forward(m: MapSpec, chain, x: float):
    """Push x through the named branch formulas, wrapping on circles."""
    sp = m.space
    y = float(x)
    for bi in chain:
        br = m.branches[bi]
        yy = None
        cands = (y, y - sp.length, y + sp.length) if sp.circle else (y,)
        for cand in cands:
            if br.lo - 1e-9 <= cand <= br.hi + 1e-9:
                yy = min(max(cand, br.lo), br.hi)
                break
        if yy is None:
            return None
        y = float(br.f(yy))
    return sp.wrap(y) if sp.circle else y


def _pull_chain(m: MapSpec, chain, lo: float, hi: float, tol: float):
    """Pull the interval (lo, hi) back through the chain (exact endpoints)."""
    a, b = lo, hi
    for bi in reversed(chain):
        br = m.branches[bi]
        a = br.inverse(a, tol)
        b = br.inverse(b, tol)
        if a > b:
            a, b = b, a
    return a, b


def first_return_scheme(m: MapSpec, base, n_max: int, tol: float = 1e-9) -> InducingScheme:
    """First-return full-branch scheme over a Markov-compatible base interval.

    Emits every first-return branch with R <= n_max; each branch is
    certified full by mapping its cylinder endpoints forward onto the
    base boundary within tol.
    """
    B_lo, B_hi = float(base[0]), float(base[1])
    sp = m.space
    if not (sp.lo - 1e-12 <= B_lo < B_hi <= sp.hi + 1e-12):
        raise ValueError("base must be a nondegenerate subinterval of the phase space")

    root_tol = min(tol * 1e-3, 1e-13)
    emitted = []
    dropped_at_horizon = False
    # queue holds forward images: (img_lo, img_hi, chain); time = len(chain)
    queue = deque()

    def advance(lo, hi, chain):
        """Split (lo,hi) by branch domains and push one-step images."""
        nonlocal dropped_at_horizon
        if len(chain) >= n_max:
            dropped_at_horizon = True
            return
        for bi, br in enumerate(m.branches):
            s_lo, s_hi = max(lo, br.lo), min(hi, br.hi)
            if s_hi - s_lo <= tol:
                continue
            v1, v2 = float(br.f(s_lo)), float(br.f(s_hi))
            queue.append((min(v1, v2), max(v1, v2), chain + (bi,)))

    advance(B_lo, B_hi, ())
    seen = 0
    while queue:
        lo, hi, chain = queue.popleft()
        seen += 1
        if seen > _MAX_PIECES:
            raise NotMarkovCompatible(
                f"piece count exceeded {_MAX_PIECES}; base is likely not Markov-compatible"
            )
        ov = min(hi, B_hi) - max(lo, B_lo)
        if ov <= tol:
            advance(lo, hi, chain)
            continue
        covers = lo <= B_lo + tol and hi >= B_hi - tol
        if not covers:
            raise NotMarkovCompatible(
                f"image ({lo:.17g}, {hi:.17g}) of a time-{len(chain)} piece "
                f"straddles the base ({B_lo:.17g}, {B_hi:.17g})"
            )
        c_lo, c_hi = _pull_chain(m, chain, B_lo, B_hi, root_tol)
        emitted.append((c_lo, c_hi, chain))
        if B_lo - lo > tol:
            advance(lo, B_lo, chain)
        if hi - B_hi > tol:
            advance(B_hi, hi, chain)

    emitted.sort(key=lambda t: (len(t[2]), t[0]))
    branches = []
    for idx, (c_lo, c_hi, chain) in enumerate(emitted):
        for e in (c_lo, c_hi):
            img = _chain_forward(m, chain, e)
            if img is None or min(sp.dist(img, B_lo), sp.dist(img, B_hi)) > tol:
                raise ToleranceFailure(
                    f"endpoint {e!r} of branch {idx} (R={len(chain)}) maps to "
                    f"{img!r}, not onto the base boundary within {tol}"
                )
        branches.append(SchemeBranch(
            index=idx, lo=c_lo, hi=c_hi, return_time=len(chain),
            chain=chain, marker=0.5 * (c_lo + c_hi),
        ))
    return InducingScheme(
        map=m, base_lo=B_lo, base_hi=B_hi, branches=tuple(branches),
        complete_up_to=n_max, exhausted=not dropped_at_horizon,
        tol=tol,
    )


@dataclass(frozen=True)
class LevelCounts:
    """n -> #{R=n}, enumerated or closed form, with a growth certificate.

    support: 'finite' (counts exactly zero beyond the table), 'infinite'
    (closed form valid for every n), or 'truncated' (enumerated horizon,
    unknown beyond).  The certificate is count(n) <= prefactor * e^{rate n}.
    """

    kind: str
    table: tuple = ()
    params: dict = field(default_factory=dict)
    horizon: int = 0
    support: str = "finite"
    rate: float = 0.0
    prefactor: float = 1.0

    def count(self, n: int) -> float:
        if n < 1:
            return 0.0
        if self.kind == "gouezel":
            try:
                return 4.0 ** (self.params["q"] + n)
            except OverflowError:
                return math.inf
        if self.kind == "constant_one":
            return 1.0
        for m, c in self.table:
            if m == n:
                return float(c)
        if self.support == "infinite":
            raise UnknownGenerator(f"no closed form for kind {self.kind}")
        return 0.0

    def log_count(self, n: int) -> float:
        """log #{R=n} (-inf at empty levels); overflow-safe for series terms."""
        if n < 1:
            return -math.inf
        if self.kind == "gouezel":
            return (self.params["q"] + n) * math.log(4.0)
        if self.kind == "constant_one":
            return 0.0
        c = self.count(n)
        return math.log(c) if c > 0 else -math.inf

    def iter_levels(self, up_to: int):
        """Nonzero (n, count) pairs with n <= up_to."""
        if self.support == "infinite":
            return [(n, self.count(n)) for n in range(1, up_to + 1)]
        return [(n, float(c)) for n, c in self.table if n <= up_to and c > 0]

    @property
    def max_level(self) -> int:
        if self.support == "infinite":
            return 0
        return max((n for n, c in self.table if c > 0), default=0)

    def occupied_levels(self):
        """Sorted levels with count > 0 ('infinite' support: all n >= 1)."""
        if self.support == "infinite":
            return None
        return [n for n, c in self.table if c > 0]

    def to_json(self) -> dict:
        return {
            "kind": self.kind, "table": [list(t) for t in self.table],
            "params": self.params, "horizon": self.horizon,
            "support": self.support, "rate": self.rate,
            "prefactor": self.prefactor,
        }


def _fit_rate(table):
    rate = 0.0
    for n, c in table:
        if c > 1:
            rate = max(rate, math.log(c) / n)
    return rate


def level_counts(s: InducingScheme) -> LevelCounts:
    """Enumerated level counts of a scheme, with fitted growth certificate."""
    ctr = Counter(b.return_time for b in s.branches)
    table = tuple(sorted((n, float(c)) for n, c in ctr.items()))
    return LevelCounts(
        kind="enumerated", table=table, horizon=s.complete_up_to,
        support="finite" if s.exhausted else "truncated",
        rate=_fit_rate(table), prefactor=1.0,
    )


def analytic_counts(kind: str, **params) -> LevelCounts:
    """Closed-form level counts: constant_one, two_at_one, gouezel(q), user_table."""
    if kind == "constant_one":
        return LevelCounts(kind="constant_one", support="infinite",
                           rate=0.0, prefactor=1.0)
    if kind == "two_at_one":
        return LevelCounts(kind="two_at_one", table=((1, 2.0),), horizon=1,
                           support="finite", rate=math.log(2.0), prefactor=1.0)
    if kind == "gouezel":
        q = int(params["q"])
        if q < 1:
            raise UnknownGenerator("gouezel needs q >= 1")
        return LevelCounts(kind="gouezel", params={"q": q}, support="infinite",
                           rate=math.log(4.0), prefactor=4.0 ** q)
    if kind == "user_table":
        tbl = sorted((int(n), float(c)) for n, c in dict(params["table"]).items())
        if any(c < 0 or c != int(c) for _, c in tbl):
            raise UnknownGenerator("user_table counts must be non-negative integers")
        complete = bool(params.get("complete", True))
        horizon = max((n for n, _ in tbl), default=0)
        return LevelCounts(kind="user_table", table=tuple(tbl), horizon=horizon,
                           support="finite" if complete else "truncated",
                           rate=_fit_rate(tbl), prefactor=1.0)
    raise UnknownGenerator(f"unknown level-count generator {kind!r}")


# ---------------------------------------------------------------------------
# cylinder refinements


@dataclass(frozen=True)
class CylinderRefinement:
    scheme: InducingScheme
    order: int
    words: tuple
    times: np.ndarray

    def word_counts(self) -> Counter:
        """#{R_ell = n} over formal words."""
        return Counter(int(t) for t in self.times)

    def interval(self, word) -> tuple:
        """Geometric cylinder of a word, by chained branch inverses."""
        m = self.scheme.map
        chain = tuple(c for idx in word for c in self.scheme.branches[idx].chain)
        return _pull_chain(m, chain, self.scheme.base_lo, self.scheme.base_hi,
                           min(self.scheme.tol * 1e-3, 1e-13))


def refine(s: InducingScheme, ell: int) -> CylinderRefinement:
    """Order-ell cylinders as formal words; R_ell is the sum of return times."""
    if ell < 1:
        raise ValueError("ell >= 1 required")
    ids = range(len(s.branches))
    words = tuple(product(ids, repeat=ell))
    R = s.return_times()
    times = np.array([int(sum(R[i] for i in w)) for w in words], dtype=int)
    return CylinderRefinement(scheme=s, order=ell, words=words, times=times)


# ---------------------------------------------------------------------------
# scheme cache files


def save_scheme(s: InducingScheme, path: str) -> None:
    doc = {
        "map": map_to_json(s.map),
        "base": [s.base_lo, s.base_hi],
        "tol": s.tol,
        "complete_up_to": s.complete_up_to,
        "exhausted": s.exhausted,
        "branches": [
            {"lo": b.lo, "hi": b.hi, "R": b.return_time,
             "chain": list(b.chain), "marker": b.marker}
            for b in s.branches
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_scheme(path: str) -> InducingScheme:
    with open(path) as fh:
        doc = json.load(fh)
    m = map_from_json(doc["map"])
    branches = tuple(
        SchemeBranch(index=i, lo=b["lo"], hi=b["hi"], return_time=b["R"],
                     chain=tuple(b["chain"]), marker=b["marker"])
        for i, b in enumerate(doc["branches"])
    )
    return InducingScheme(
        map=m, base_lo=doc["base"][0], base_hi=doc["base"][1],
        branches=branches, complete_up_to=doc["complete_up_to"],
        exhausted=doc["exhausted"], tol=doc["tol"],
    )
