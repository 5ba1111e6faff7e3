"""r-separated sets, covering numbers and doubling cover profiles on finite samples.

A separated set found on a sample lower-bounds aleph(X, rho, r) of the whole space; a cover
found on a sample upper-bounds the covering number of the sample. Cover centers are always
sample points.
"""
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from core.config import settings
from core.errors import CapExceededError, PreconditionError, StructuralError
from core.logging import get_logger
from core.parallel import parallel_map
from utils.metric import DistanceMatrix

logger = get_logger("packing")


class SeparatedSet(BaseModel):
    radius: float = Field(..., gt=0)
    members: Tuple[int, ...]
    exact: bool = False
    bound: str = "lower"

    @property
    def size(self) -> int:
        return len(self.members)


class PackingFit(BaseModel):
    exponent: float
    constant: float


class CoverProfile(BaseModel):
    radii: List[float]
    centers: List[int]
    counts: List[List[int]] = Field(..., description="counts[c][k]: balls of radius radii[k] covering B(centers[c], 2 radii[k])")
    max_per_radius: List[int]
    exact: bool
    bound: str = "upper"

    @property
    def overall_max(self) -> int:
        return max(self.max_per_radius) if self.max_per_radius else 0


class DoublingReport(BaseModel):
    radii: List[float]
    l_values: List[float] = Field(default_factory=list)
    counts: List[int] = Field(default_factory=list)
    exact: List[bool] = Field(default_factory=list)
    ratios: List[float] = Field(default_factory=list)
    max_ratio: Optional[float] = None
    trend_slope: Optional[float] = None
    consistent_with_doubling: Optional[bool] = None
    fitted_exponent: Optional[float] = None
    fitted_constant: Optional[float] = None
    fit: Optional[Dict[str, float]] = Field(None, description="{N, C} of log2 aleph ~ log2 C + N l")
    cover_profile: Optional[CoverProfile] = None
    bound: str = "lower"

    @model_validator(mode="after")
    def check_counts_monotone(self):
        if self.counts:
            order = np.argsort(self.radii)
            ordered = np.asarray(self.counts)[order]
            if np.any(np.diff(ordered) > 0):
                raise ValueError("separated-set counts must be nonincreasing as the radius grows")
        return self


def _check_radius(r: float):
    if not r > 0:
        raise PreconditionError(f"radius must be positive, got {r}")


def verify_separated(m: DistanceMatrix, members: Sequence[int], r: float):
    idx = np.asarray(members, dtype=int)
    if idx.size < 2:
        return
    sub = m.d[np.ix_(idx, idx)]
    off = ~np.eye(idx.size, dtype=bool)
    if np.any(sub[off] < r):
        raise StructuralError(f"set of {idx.size} points is not {r}-separated")


def greedy_separated(m: DistanceMatrix, r: float, order: Optional[Sequence[int]] = None) -> SeparatedSet:
    """Maximal r-separated set by an index-order scan; it is also an r-cover of the sample."""
    _check_radius(r)
    order = range(m.n) if order is None else order
    blocked = np.zeros(m.n, dtype=bool)
    chosen = []
    for i in order:
        if not blocked[i]:
            chosen.append(int(i))
            blocked |= m.d[i] < r
    verify_separated(m, chosen, r)
    return SeparatedSet(radius=r, members=tuple(sorted(chosen)), exact=False)


class _CliqueSearch:
    """Maximum clique by branch and bound with greedy-colouring bounds.

    Vertices are relabelled by descending degree (ties by index) so that bit p of every mask
    is the p-th vertex of that order; exploration order is therefore deterministic.
    """

    def __init__(self, adjacency: np.ndarray):
        degrees = adjacency.sum(axis=1)
        self.order = sorted(range(len(degrees)), key=lambda v: (-int(degrees[v]), v))
        rank = {v: p for p, v in enumerate(self.order)}
        self.adj = []
        for v in self.order:
            mask = 0
            for u in np.flatnonzero(adjacency[v]):
                mask |= 1 << rank[int(u)]
            self.adj.append(mask)
        self.best: List[int] = []
        self.nodes = 0

    def _colour(self, P: int) -> Tuple[List[int], List[int]]:
        order, colours = [], []
        uncoloured = P
        colour = 0
        while uncoloured:
            colour += 1
            Q = uncoloured
            while Q:
                v = (Q & -Q).bit_length() - 1
                Q &= ~self.adj[v] & ~(1 << v)
                uncoloured &= ~(1 << v)
                order.append(v)
                colours.append(colour)
        return order, colours

    def _expand(self, R: List[int], P: int):
        self.nodes += 1
        order, colours = self._colour(P)
        for idx in range(len(order) - 1, -1, -1):
            if len(R) + colours[idx] <= len(self.best):
                return
            v = order[idx]
            newP = P & self.adj[v]
            if newP:
                self._expand(R + [v], newP)
            elif len(R) + 1 > len(self.best):
                self.best = R + [v]
            P &= ~(1 << v)

    def solve(self, seed: Sequence[int]) -> List[int]:
        rank = {v: p for p, v in enumerate(self.order)}
        self.best = [rank[v] for v in seed]
        self._expand([], (1 << len(self.order)) - 1)
        return sorted(self.order[p] for p in self.best)


def max_separated_exact(m: DistanceMatrix, r: float, cap: Optional[int] = None) -> SeparatedSet:
    """Maximum r-separated set: a maximum clique of the graph joining pairs with d >= r."""
    _check_radius(r)
    cap = cap or settings.EXACT_CAP
    if m.n > cap:
        raise CapExceededError(
            f"{m.n} points exceed the exact search cap {cap}; use greedy_separated for a lower bound"
        )
    adjacency = m.d >= r
    np.fill_diagonal(adjacency, False)
    seed = greedy_separated(m, r)
    search = _CliqueSearch(adjacency)
    members = search.solve(seed.members)
    verify_separated(m, members, r)
    logger.debug(f"Exact aleph at r={r}: {len(members)} of {m.n} points, {search.nodes} search nodes")
    return SeparatedSet(radius=r, members=tuple(members), exact=True)


def separated_set(m: DistanceMatrix, r: float, exact: bool = False, cap: Optional[int] = None) -> SeparatedSet:
    """Exact maximum when requested and within the cap, otherwise the greedy lower bound."""
    cap = cap or settings.EXACT_CAP
    if exact and m.n <= cap:
        return max_separated_exact(m, r, cap)
    return greedy_separated(m, r)


def _bitmask(row: np.ndarray) -> int:
    return int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little")


def _greedy_cover(masks: Dict[int, int], universe: int) -> List[int]:
    chosen = []
    uncovered = universe
    while uncovered:
        best = max(masks, key=lambda c: ((masks[c] & uncovered).bit_count(), -c))
        chosen.append(best)
        uncovered &= ~masks[best]
    return chosen


def _exact_cover(masks: Dict[int, int], universe: int) -> List[int]:
    best = _greedy_cover(masks, universe)
    largest = max(mask.bit_count() for mask in masks.values())
    by_element: Dict[int, List[int]] = {}
    for c, mask in masks.items():
        bits = mask
        while bits:
            e = (bits & -bits).bit_length() - 1
            by_element.setdefault(e, []).append(c)
            bits &= bits - 1

    def search(uncovered: int, chosen: List[int]):
        nonlocal best
        if not uncovered:
            if len(chosen) < len(best):
                best = list(chosen)
            return
        if len(chosen) + math.ceil(uncovered.bit_count() / largest) >= len(best):
            return
        e = (uncovered & -uncovered).bit_length() - 1
        candidates = sorted(by_element[e], key=lambda c: (-(masks[c] & uncovered).bit_count(), c))
        for c in candidates:
            chosen.append(c)
            search(uncovered & ~masks[c], chosen)
            chosen.pop()

    search(universe, [])
    return sorted(best)


def cover_centers(m: DistanceMatrix, r: float, targets: Optional[Sequence[int]] = None,
                  exact: Optional[bool] = None, cap: Optional[int] = None) -> Tuple[List[int], bool]:
    """Sample points whose radius-r balls cover targets; exact set cover when targets fit the cap."""
    _check_radius(r)
    cap = cap or settings.EXACT_CAP
    targets = np.arange(m.n) if targets is None else np.asarray(targets, dtype=int)
    if targets.size == 0:
        return [], True
    exact = targets.size <= cap if exact is None else exact and targets.size <= cap
    within = m.d[:, targets] < r
    masks: Dict[int, int] = {}
    seen = set()
    for c in np.flatnonzero(within.any(axis=1)):
        mask = _bitmask(within[c])
        if mask not in seen:
            seen.add(mask)
            masks[int(c)] = mask
    universe = (1 << targets.size) - 1
    centers = _exact_cover(masks, universe) if exact else sorted(_greedy_cover(masks, universe))
    return centers, exact


def covering_number(m: DistanceMatrix, r: float, exact: Optional[bool] = None,
                    cap: Optional[int] = None) -> int:
    """Radius-r balls centred at sample points needed to cover the sample (exact within the cap)."""
    centers, _ = cover_centers(m, r, exact=exact, cap=cap)
    return len(centers)


def _net_cover_count(m: DistanceMatrix, targets: np.ndarray, r: float) -> int:
    uncovered = np.ones(targets.size, dtype=bool)
    count = 0
    while uncovered.any():
        first = targets[int(np.argmax(uncovered))]
        uncovered &= ~(m.d[first, targets] < r)
        count += 1
    return count


def geometric_doubling_profile(m: DistanceMatrix, radii: Sequence[float],
                               centers: Optional[Sequence[int]] = None,
                               exact: bool = False, cap: Optional[int] = None) -> CoverProfile:
    """For each center x and radius r, radius-r balls needed to cover B(x, 2r).

    The default count is a greedy net (a maximal r-separated subset of B(x, 2r)), an upper bound;
    with exact=True balls of at most `cap` points are covered optimally by sample-centred balls.
    """
    radii = [float(r) for r in radii]
    for r in radii:
        _check_radius(r)
    centers = list(range(m.n)) if centers is None else [int(c) for c in centers]
    cap = cap or settings.EXACT_CAP

    def profile_row(x: int) -> List[int]:
        row = []
        for r in radii:
            targets = np.flatnonzero(m.d[x] < 2 * r)
            if exact and targets.size <= cap:
                row.append(len(cover_centers(m, r, targets, exact=True, cap=cap)[0]))
            else:
                row.append(_net_cover_count(m, targets, r))
        return row

    counts = parallel_map(profile_row, centers)
    max_per_radius = [max(row[k] for row in counts) for k in range(len(radii))] if counts else []
    logger.debug(f"Doubling profile over {len(centers)} centers: {max_per_radius}")
    return CoverProfile(radii=radii, centers=centers, counts=counts,
                        max_per_radius=max_per_radius, exact=exact)


def ball_separated_set(m: DistanceMatrix, center: int, r: float, exact: bool = False,
                       cap: Optional[int] = None) -> SeparatedSet:
    """An r-separated subset of B(center, 2r).

    The radius-r/2 balls around its members are pairwise disjoint, so no cover of B(center, 2r)
    by radius-r/2 balls has fewer members than this set.
    """
    _check_radius(r)
    targets = np.flatnonzero(m.d[center] < 2 * r)
    sub = m.submatrix(targets)
    found = separated_set(sub, r, exact=exact, cap=cap)
    members = tuple(int(targets[i]) for i in found.members)
    return SeparatedSet(radius=r, members=members, exact=found.exact)


def packing_exponent_fit(l_values: Sequence[float], counts: Sequence[int]) -> PackingFit:
    """Least-squares line through (l, log2 count): slope N, intercept log2 C."""
    ls = np.asarray(l_values, dtype=float)
    cs = np.asarray(counts, dtype=float)
    if ls.size != cs.size:
        raise PreconditionError("l values and counts differ in length")
    if np.unique(ls).size < 2:
        raise PreconditionError("the exponent fit needs at least 2 distinct l values")
    if np.any(cs < 1):
        raise PreconditionError("counts must be at least 1")
    slope, intercept = np.polyfit(ls, np.log2(cs), 1)
    return PackingFit(exponent=float(slope), constant=float(2.0 ** intercept))


def packing_report(m: DistanceMatrix, l_values: Sequence[int], exact: bool = False,
                   cap: Optional[int] = None) -> DoublingReport:
    """aleph lower bounds on the dyadic radii 2^-l with the exponent fit.

    A set separated at a larger radius is separated at every smaller one, so each count is
    the best size found at its radius or any larger one.
    """
    ls = sorted(int(l) for l in l_values)
    radii = [2.0 ** -l for l in ls]
    found = parallel_map(lambda r: separated_set(m, r, exact=exact, cap=cap), radii)
    counts = []
    best = 0
    for s in found:
        best = max(best, s.size)
        counts.append(best)
    flags = [s.exact for s in found]
    fit = packing_exponent_fit(ls, counts) if len(set(ls)) >= 2 else None
    return DoublingReport(
        radii=radii,
        l_values=[float(l) for l in ls],
        counts=counts,
        exact=flags,
        fitted_exponent=None if fit is None else fit.exponent,
        fitted_constant=None if fit is None else fit.constant,
        fit=None if fit is None else {"N": fit.exponent, "C": fit.constant},
    )


def max_separated_bruteforce(m: DistanceMatrix, r: float) -> int:
    """Largest r-separated subset by enumerating every r-separated subset; an oracle for n <= 16."""
    _check_radius(r)
    if m.n > 16:
        raise CapExceededError("exhaustive subset search is limited to 16 points")
    close = m.d < r
    np.fill_diagonal(close, False)
    conflict = [_bitmask(row) for row in close]
    best = 0

    def extend(start: int, chosen: int, size: int):
        nonlocal best
        best = max(best, size)
        for v in range(start, m.n):
            if not conflict[v] & chosen:
                extend(v + 1, chosen | (1 << v), size + 1)

    extend(0, 0, 0)
    return best
