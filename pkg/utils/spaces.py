"""Finite samples of the concrete spaces: truncated torus grids, product metrics, the Cantor set
and the log-line.

Points of the infinite-dimensional torus are truncated to their first n coordinates with the
tail fixed at 0; the subgroup grids E_{n,j} only ever use such points.
"""
import itertools
import math
from dataclasses import dataclass
from typing import Callable, List, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator

from core.config import settings
from core.errors import CapExceededError, PreconditionError, StructuralError
from core.logging import get_logger
from core.parallel import parallel_map
from utils.measure import MeasuredSpace
from utils.metric import DistanceMatrix, leq_tol
from utils.packing import packing_exponent_fit, separated_set

logger = get_logger("spaces")

TorusMetric = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Indexed points with coordinates in a named ambient space."""
    coords: np.ndarray
    space: Literal["torus", "real", "cantor"] = "torus"

    def __post_init__(self):
        arr = np.array(self.coords, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise StructuralError(f"coordinates must form an (N, dim) array, got shape {arr.shape}")
        if self.space == "torus" and np.any((arr < 0) | (arr >= 1)):
            raise StructuralError("torus coordinates must lie in [0, 1)")
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    @property
    def size(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]


class TorusPoint(BaseModel):
    """A point of the torus truncated after its last listed coordinate; the rest are 0."""
    coords: List[float]

    @field_validator('coords')
    def validate_coords(cls, v):
        if any(not 0 <= c < 1 for c in v):
            raise ValueError("torus coordinates must lie in [0, 1)")
        return v

    def padded(self, dim: int) -> np.ndarray:
        if any(c != 0 for c in self.coords[dim:]):
            raise PreconditionError(f"point has nonzero coordinates beyond the first {dim}")
        out = np.zeros(dim)
        head = self.coords[:dim]
        out[:len(head)] = head
        return out


class ProductMetricSpec(BaseModel):
    kind: Literal["weighted_sum", "sup", "bendikov"] = "weighted_sum"
    weights: Optional[List[float]] = Field(None, description="a_n for bendikov, coordinate weights for weighted_sum")

    @field_validator('weights')
    def validate_weights(cls, v):
        if v is not None and any(not (w > 0 and math.isfinite(w)) for w in v):
            raise ValueError("weights must be finite and strictly positive")
        return v

    def weights_for(self, n: int) -> np.ndarray:
        if self.weights is None:
            return 2.0 ** -np.arange(1, n + 1)
        if len(self.weights) < n:
            raise StructuralError(f"{len(self.weights)} weights given for {n} coordinates")
        return np.asarray(self.weights[:n], dtype=float)


def _toric(a, b):
    diff = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    return np.minimum(diff, 1.0 - diff)


def toric_distance(x: float, y: float) -> float:
    """min{|x - y|, 1 - |x - y|} for x, y in [0, 1)."""
    for v in (x, y):
        if not 0 <= v < 1:
            raise PreconditionError(f"torus coordinate {v} outside [0, 1)")
    return float(_toric(x, y))


def torus_metric(spec: ProductMetricSpec, n: int) -> TorusMetric:
    """Vectorized product metric on arrays of truncated torus points (last axis = coordinates)."""
    w = spec.weights_for(n) if spec.kind != "sup" else None

    def metric(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        t = _toric(x, y)
        if spec.kind == "sup":
            return np.max(t, axis=-1)
        if spec.kind == "weighted_sum":
            return np.sum(w * t, axis=-1)
        return np.sqrt(np.sum(w * t * t, axis=-1))

    return metric


def torus_grid(n: int, j: int, cap: Optional[int] = None) -> PointCloud:
    """E_{n,j}: all (x_1..x_n, 0, ...) with x_i in {k 2^-j}; lexicographic, identity first."""
    if n < 1 or j < 1:
        raise PreconditionError(f"torus grid needs n >= 1 and j >= 1, got n={n}, j={j}")
    cap = cap or settings.GRID_CAP
    if n * j > 62 or 2 ** (n * j) > cap:
        raise CapExceededError(f"E_{n},{j} has 2^{n * j} points, above the grid cap {cap}")
    coords = np.indices((2 ** j,) * n).reshape(n, -1).T / 2 ** j
    return PointCloud(coords, space="torus")


def torus_translate(points: PointCloud, t: Union[TorusPoint, Sequence[float]]) -> PointCloud:
    shift = t if isinstance(t, TorusPoint) else TorusPoint(coords=list(t))
    return PointCloud(np.mod(points.coords + shift.padded(points.dim), 1.0), space="torus")


def torus_double(points: PointCloud) -> PointCloud:
    return PointCloud(np.mod(2 * points.coords, 1.0), space="torus")


def pairwise(points: PointCloud, metric: TorusMetric, block: int = 256) -> np.ndarray:
    """Dense pairwise distances, assembled in row blocks."""
    cap = settings.MATRIX_CAP
    if points.size > cap:
        raise CapExceededError(f"{points.size} points exceed the dense matrix cap {cap}")
    X = points.coords
    rows = parallel_map(lambda start: metric(X[start:start + block, None, :], X[None, :, :]),
                        range(0, points.size, block))
    d = np.vstack(rows)
    np.fill_diagonal(d, 0.0)
    return np.minimum(d, d.T)


def product_metric(points: PointCloud, spec: ProductMetricSpec) -> DistanceMatrix:
    if points.space != "torus":
        raise StructuralError(f"product metrics need torus points, got {points.space}")
    metric = torus_metric(spec, points.dim)
    return DistanceMatrix(pairwise(points, metric))


def subgroup_distance_row(n: int, j: int, metric: ProductMetricSpec) -> np.ndarray:
    """rho(0, z) for every z of E_{n,j} in grid order; for an invariant metric this row is the whole matrix."""
    grid = torus_grid(n, j)
    return torus_metric(metric, n)(np.zeros(n), grid.coords)


def subgroup_min_distance(n: int, j: int, metric: ProductMetricSpec) -> float:
    """r_{n,j} = min over nonzero z in E_{n,j} of rho(0, z)."""
    return float(np.min(subgroup_distance_row(n, j, metric)[1:]))


def subgroup_recurrence(n: int, j_max: int, metric: ProductMetricSpec) -> List[dict]:
    """Per j: r_{n,j} against min{r_{n,1}, r_{n,j-1}/2} and against r_{n,1} 2^{-j+1}."""
    rows = []
    r1 = subgroup_min_distance(n, 1, metric)
    previous = None
    for j in range(1, j_max + 1):
        r = r1 if j == 1 else subgroup_min_distance(n, j, metric)
        step = r1 if previous is None else min(r1, previous / 2)
        bound = r1 * 2.0 ** (-j + 1)
        rows.append({
            "j": j,
            "r": r,
            "recurrence_bound": step,
            "recurrence_holds": bool(leq_tol(step, r)),
            "power_bound": bound,
            "power_bound_holds": bool(leq_tol(bound, r)),
        })
        previous = r
    return rows


def cantor_numerators(level: int) -> np.ndarray:
    """pi(x) * 3^level for every code x in {0, 1/2}^level, as exact integers, increasing."""
    digits = np.array(list(itertools.product((0, 2), repeat=level)), dtype=np.int64)
    powers = 3 ** np.arange(level - 1, -1, -1, dtype=np.int64)
    return digits @ powers


def cantor_space(level: int, cap: Optional[int] = None) -> MeasuredSpace:
    """Level-truncated Cantor set under |x - y| with the uniform coin-flip measure."""
    if level < 1:
        raise PreconditionError(f"Cantor level must be at least 1, got {level}")
    cap = cap or settings.GRID_CAP
    if 2 ** level > min(cap, settings.MATRIX_CAP):
        raise CapExceededError(f"Cantor level {level} has 2^{level} points, above the cap")
    numerators = cantor_numerators(level)
    scale = 3 ** level
    d = np.abs(numerators[:, None] - numerators[None, :]) / scale
    coords = numerators / scale
    weights = np.full(numerators.size, 2.0 ** -level)
    logger.debug(f"Cantor space at level {level}: {numerators.size} points")
    return MeasuredSpace(DistanceMatrix(d), weights, PointCloud(coords, space="cantor"))


def log_line(xs: Sequence[float]) -> DistanceMatrix:
    """d(i, j) = ln(1 + |x_i - x_j|): the real line, same topology, never geometrically doubling."""
    x = np.asarray(xs, dtype=float)
    if np.unique(x).size != x.size:
        raise StructuralError("log-line points must be distinct")
    return DistanceMatrix(np.log1p(np.abs(x[:, None] - x[None, :])))


def log_line_points(span: float, count: int) -> np.ndarray:
    """count evenly spaced reals on [-(e^span - 1), e^span - 1], so B(0, span) is the whole range."""
    half = math.expm1(span)
    return np.linspace(-half, half, count)


class Theorem2Row(BaseModel):
    j: int
    points: int
    r: float
    aleph: int
    whole_grid_separated: bool
    power_bound: float
    power_bound_holds: bool
    recurrence_bound: float
    recurrence_holds: bool


class Theorem2Report(BaseModel):
    n: int
    metric: ProductMetricSpec
    rows: List[Theorem2Row]
    fitted_exponent: Optional[float] = None
    fitted_constant: Optional[float] = None
    passed: bool
    bound: str = "lower"


def theorem2_report(n: int, j_values: Sequence[int], metric: ProductMetricSpec,
                    cap: Optional[int] = None) -> Theorem2Report:
    """aleph(E_{n,j}, r_{n,j}) per j, the lower bounds on r_{n,j}, and the exponent fit in l = -log2 r_{n,j}.

    Grids that fit a dense matrix are searched with separated_set; larger grids rely on
    invariance, where the whole grid is r_{n,j}-separated by definition of r_{n,j}.
    """
    js = sorted(int(j) for j in j_values)
    recurrence = {row["j"]: row for row in subgroup_recurrence(n, js[-1], metric)}
    rows = []
    for j in js:
        grid = torus_grid(n, j)
        r = recurrence[j]["r"]
        if grid.size <= settings.MATRIX_CAP:
            found = separated_set(product_metric(grid, metric), r, exact=True, cap=cap)
            aleph = found.size
        else:
            aleph = grid.size
        rows.append(Theorem2Row(
            j=j,
            points=grid.size,
            r=r,
            aleph=aleph,
            whole_grid_separated=aleph == grid.size,
            power_bound=recurrence[j]["power_bound"],
            power_bound_holds=recurrence[j]["power_bound_holds"],
            recurrence_bound=recurrence[j]["recurrence_bound"],
            recurrence_holds=recurrence[j]["recurrence_holds"],
        ))
        logger.debug(f"E_{n},{j}: r={r:.6g}, aleph={aleph} of {grid.size}")
    fit = None
    if len(rows) >= 2:
        fit = packing_exponent_fit([-math.log2(row.r) for row in rows], [row.aleph for row in rows])
    passed = all(row.whole_grid_separated and row.power_bound_holds for row in rows)
    return Theorem2Report(
        n=n,
        metric=metric,
        rows=rows,
        fitted_exponent=None if fit is None else fit.exponent,
        fitted_constant=None if fit is None else fit.constant,
        passed=passed,
    )
