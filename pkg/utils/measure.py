"""Doubling-constant sweeps for finite measured samples.

A sweep covers finitely many (center, radius) pairs, so every constant reported here is a
lower bound for the doubling constant of the measure and the verdict is sample-level only.
"""
from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from core.config import settings
from core.errors import PreconditionError, StructuralError
from core.logging import get_logger
from core.parallel import parallel_map
from utils.metric import DistanceMatrix, ball
from utils.packing import DoublingReport

if TYPE_CHECKING:
    from utils.spaces import PointCloud

logger = get_logger("measure")


@dataclass(frozen=True, eq=False)
class MeasuredSpace:
    """A distance matrix with a nonnegative point mass per point."""
    matrix: DistanceMatrix
    weights: np.ndarray
    points: Optional["PointCloud"] = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size != self.matrix.n:
            raise StructuralError(f"expected {self.matrix.n} weights, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise StructuralError("weights must be finite and nonnegative")
        if not w.sum() > 0:
            raise StructuralError("total mass must be positive")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    def scaled(self, c: float) -> "MeasuredSpace":
        return MeasuredSpace(self.matrix, self.weights * c, self.points)

    @classmethod
    def uniform(cls, matrix: DistanceMatrix, points: Optional["PointCloud"] = None) -> "MeasuredSpace":
        return cls(matrix, np.full(matrix.n, 1.0 / matrix.n), points)


class BallMassRow(BaseModel):
    n: int
    radius: float
    min_mass: float
    max_mass: float
    expected: float
    exact: bool


def ball_measure(s: MeasuredSpace, center: int, r: float) -> float:
    members = ball(s.matrix, center, r).members
    return float(s.weights[list(members)].sum())


def _masses(s: MeasuredSpace, centers: np.ndarray, r: float) -> np.ndarray:
    return (s.matrix.d[centers] < r) @ s.weights


def doubling_constant(s: MeasuredSpace, radii: Sequence[float],
                      centers: Optional[Sequence[int]] = None) -> float:
    """max over centers x and radii r of mu(B(x, 2r)) / mu(B(x, r)); at least 1."""
    centers = np.arange(s.matrix.n) if centers is None else np.asarray(centers, dtype=int)
    radii = [float(r) for r in radii]
    for r in radii:
        if not r > 0:
            raise PreconditionError(f"radius must be positive, got {r}")

    def worst_ratio(r: float) -> float:
        inner = _masses(s, centers, r)
        empty = np.flatnonzero(inner == 0)
        if empty.size:
            raise PreconditionError(
                f"ball B({int(centers[empty[0]])}, {r}) has zero mass; the doubling ratio is undefined there"
            )
        return float(np.max(_masses(s, centers, 2 * r) / inner))

    ratios = parallel_map(worst_ratio, radii)
    return max([1.0, *ratios])


def trend_slope(l_values: Sequence[float], ratios: Sequence[float]) -> Optional[float]:
    """Least-squares slope of ln(ratio) against l, or None with fewer than 2 distinct l."""
    ls = np.asarray(l_values, dtype=float)
    if np.unique(ls).size < 2:
        return None
    slope, _ = np.polyfit(ls, np.log(np.asarray(ratios, dtype=float)), 1)
    return float(slope)


def _verdict(l_values: List[int], ratios: List[float], threshold: Optional[float]) -> DoublingReport:
    threshold = settings.TREND_THRESHOLD if threshold is None else threshold
    slope = trend_slope(l_values, ratios)
    consistent = slope is None or slope <= threshold
    logger.info(f"Doubling sweep over l={l_values[0]}..{l_values[-1]}: slope={slope}, consistent={consistent}")
    return DoublingReport(
        radii=[2.0 ** -l for l in l_values],
        l_values=[float(l) for l in l_values],
        ratios=ratios,
        max_ratio=max(ratios),
        trend_slope=slope,
        consistent_with_doubling=consistent,
    )


def doubling_verdict(s: MeasuredSpace, l_range: Sequence[int], centers: Optional[Sequence[int]] = None,
                     threshold: Optional[float] = None) -> DoublingReport:
    """Per-l doubling ratios at r = 2^-l and the sample-consistent-with-doubling flag.

    Centers default to the support of the measure, where every ball has positive mass.
    The flag is false when ln(ratio) grows faster than the trend threshold per unit of l.
    """
    ls = sorted(int(l) for l in l_range)
    if not ls:
        raise PreconditionError("the doubling sweep needs at least one l")
    centers = s.support if centers is None else np.asarray(centers, dtype=int)
    ratios = [doubling_constant(s, [2.0 ** -l], centers) for l in ls]
    return _verdict(ls, ratios, threshold)


def invariant_doubling_verdict(row: Sequence[float], l_range: Sequence[int],
                               threshold: Optional[float] = None) -> DoublingReport:
    """Doubling sweep for the uniform measure on a finite group with an invariant metric.

    row holds the distances from the identity to every group element; every ball then has the
    mass of the ball of the same radius at the identity, so no dense matrix is needed.
    """
    d = np.sort(np.asarray(row, dtype=float))
    if d.size == 0 or d[0] != 0:
        raise StructuralError("the distance row must contain the identity at distance 0")
    ls = sorted(int(l) for l in l_range)
    if not ls:
        raise PreconditionError("the doubling sweep needs at least one l")
    ratios = []
    for l in ls:
        r = 2.0 ** -l
        inner = np.searchsorted(d, r, side="left")
        outer = np.searchsorted(d, 2 * r, side="left")
        ratios.append(float(outer / inner))
    return _verdict(ls, ratios, threshold)


def cantor_ball_table(space: MeasuredSpace, level: int) -> List[BallMassRow]:
    """mu(B(x, 3^-n)) over every sample center against 2^-n, for n = 1..level-1."""
    rows = []
    for n in range(1, level):
        r = 3.0 ** -n
        masses = _masses(space, np.arange(space.matrix.n), r)
        expected = 2.0 ** -n
        rows.append(BallMassRow(
            n=n,
            radius=r,
            min_mass=float(masses.min()),
            max_mass=float(masses.max()),
            expected=expected,
            exact=bool(np.all(masses == expected)),
        ))
    return rows
