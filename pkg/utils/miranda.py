"""Face-distance functions on the cube [0, 1/2]^n of the torus and a Poincare-Miranda solver.

The cube E_n is sampled on a regular grid; the lower faces {x_i = 0} and upper faces
{x_i = 1/2} are sampled with the same grid. f_i(x) is the distance from an arbitrary cube
point x to the sampled lower face i, so it is 1-Lipschitz whenever the callback is a metric.
"""
import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field

from core.config import settings
from core.errors import CapExceededError, ConvergenceError, PreconditionError, StructuralError
from core.logging import get_logger
from core.parallel import parallel_map
from utils.metric import DistanceMatrix, leq_tol, quasi_constant
from utils.packing import separated_set
from utils.spaces import PointCloud, ProductMetricSpec, TorusMetric, pairwise, torus_metric

logger = get_logger("miranda")

BatchMap = Callable[[np.ndarray], np.ndarray]

_BLOCK = 256


def _product(axes: List[np.ndarray]) -> np.ndarray:
    rows = list(itertools.product(*axes))
    return np.array(rows, dtype=float).reshape(len(rows), len(axes))


@dataclass(frozen=True, eq=False)
class CubeSample:
    n: int
    resolution: int
    metric: TorusMetric

    def __post_init__(self):
        if self.n < 1:
            raise PreconditionError(f"cube dimension must be at least 1, got {self.n}")
        if self.resolution < 2:
            raise PreconditionError(f"resolution must be at least 2, got {self.resolution}")
        if self.resolution ** self.n > settings.GRID_CAP:
            raise CapExceededError(
                f"{self.resolution}^{self.n} cube points exceed the grid cap {settings.GRID_CAP}"
            )

    @cached_property
    def axis(self) -> np.ndarray:
        return np.linspace(0.0, 0.5, self.resolution)

    @cached_property
    def points(self) -> PointCloud:
        idx = np.indices((self.resolution,) * self.n).reshape(self.n, -1).T
        return PointCloud(self.axis[idx], space="torus")

    @cached_property
    def matrix(self) -> DistanceMatrix:
        return DistanceMatrix(pairwise(self.points, self.metric))

    def face(self, i: int, upper: bool = False) -> np.ndarray:
        """Sampled E^-_{n,i} (or E^+_{n,i}): grid points with x_i = 0 (or 1/2)."""
        if not 0 <= i < self.n:
            raise PreconditionError(f"axis {i} outside 0..{self.n - 1}")
        rest = _product([self.axis] * (self.n - 1))
        value = np.full((rest.shape[0], 1), 0.5 if upper else 0.0)
        return np.hstack([rest[:, :i], value, rest[:, i:]])

    @cached_property
    def lower_faces(self) -> List[np.ndarray]:
        faces = [self.face(i) for i in range(self.n)]
        if any(f.shape[0] == 0 for f in faces):
            raise StructuralError("a sampled cube face is empty")
        return faces

    @property
    def cell(self) -> float:
        return 0.5 / (self.resolution - 1)


class MirandaSolution(BaseModel):
    point: List[float]
    residual: float
    depth: int


class WitnessSet(BaseModel):
    n: int
    j: int
    gap: float
    spacing: float
    targets: List[List[float]]
    witnesses: List[List[float]] = Field(..., description="x_v as torus coordinates, in target order")
    residuals: List[float]
    tol: float
    discretization_error: float
    effective_tol: float
    min_pairwise: float
    separation_bound: float
    separated_count: int
    passed: bool
    bound: str = "lower"


def cube_sample(n: int, metric: Union[ProductMetricSpec, TorusMetric],
                resolution: Optional[int] = None) -> CubeSample:
    rho = torus_metric(metric, n) if isinstance(metric, ProductMetricSpec) else metric
    return CubeSample(n=n, resolution=resolution or settings.MIRANDA_RESOLUTION, metric=rho)


def face_distances(c: CubeSample, X: np.ndarray) -> np.ndarray:
    """f_{n,i}(x) for every row x of X and every axis i, shape (len(X), n)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.empty((X.shape[0], c.n))
    for i, face in enumerate(c.lower_faces):
        for start in range(0, X.shape[0], _BLOCK):
            block = X[start:start + _BLOCK]
            out[start:start + _BLOCK, i] = np.min(c.metric(block[:, None, :], face[None, :, :]), axis=1)
    return out


def face_distance(c: CubeSample, i: int, x: Union[int, Sequence[float]]) -> float:
    """inf over the sampled face E^-_{n,i} of rho(x, y); x is a sample index or cube coordinates."""
    coords = c.points.coords[x] if isinstance(x, (int, np.integer)) else np.asarray(x, dtype=float)
    if not 0 <= i < c.n:
        raise PreconditionError(f"axis {i} outside 0..{c.n - 1}")
    return float(face_distances(c, coords[None, :])[0, i])


def face_gap(c: CubeSample) -> float:
    """C_n: min over axes of the distance between the sampled faces E^-_{n,i} and E^+_{n,i}."""
    gap = np.inf
    for i in range(c.n):
        lower, upper = c.lower_faces[i], c.face(i, upper=True)
        for start in range(0, lower.shape[0], _BLOCK):
            block = lower[start:start + _BLOCK]
            gap = min(gap, float(np.min(c.metric(block[:, None, :], upper[None, :, :]))))
    if not gap > 0:
        raise StructuralError("opposite cube faces are at distance 0; the metric is degenerate")
    return gap


def lipschitz_check(c: CubeSample, i: int) -> bool:
    """|f_i(x) - f_i(x')| <= rho(x, x') over every sampled pair."""
    f = face_distances(c, c.points.coords)[:, i]
    d = c.matrix.d
    for start in range(0, f.size, _BLOCK):
        diff = np.abs(f[start:start + _BLOCK, None] - f[None, :])
        if not np.all(leq_tol(diff, d[start:start + _BLOCK])):
            return False
    return True


def discretization_error(c: CubeSample) -> float:
    """Distance from the origin to a half-cell offset in the coordinates other than i, max over i.

    Sampling the face moves the infimum by at most this much for a product metric.
    """
    worst = 0.0
    for i in range(c.n):
        offset = np.full(c.n, c.cell / 2)
        offset[i] = 0.0
        worst = max(worst, float(c.metric(np.zeros(c.n), offset)))
    return worst


def _face_grid(lo: np.ndarray, hi: np.ndarray, i: int, value: float, points: int) -> np.ndarray:
    rest = _product([np.linspace(lo[k], hi[k], points) for k in range(len(lo)) if k != i])
    return np.insert(rest, i, value, axis=1)


def _violation(f: BatchMap, a: np.ndarray, lo: np.ndarray, hi: np.ndarray, points: int) -> float:
    """How far f misses the Miranda sign conditions on the sampled boundary of [lo, hi]."""
    worst = 0.0
    for i in range(len(a)):
        below = f(_face_grid(lo, hi, i, lo[i], points))[:, i]
        above = f(_face_grid(lo, hi, i, hi[i], points))[:, i]
        worst = max(worst, float(np.max(below - a[i])), float(np.max(a[i] - above)))
    return worst


def _pattern(n: int) -> np.ndarray:
    """Every nonzero vector of {-1, 0, 1}^n for small n, the 2n compass moves otherwise."""
    if n > 4:
        return np.vstack([np.eye(n), -np.eye(n)])
    moves = _product([np.array([-1.0, 0.0, 1.0])] * n)
    return moves[np.any(moves != 0, axis=1)]


def _residual(f: BatchMap, a: np.ndarray, X: np.ndarray) -> np.ndarray:
    return np.max(np.abs(f(np.atleast_2d(X)) - a), axis=1)


def miranda_solve(f: BatchMap, a: Sequence[float], tol: float,
                  boundary_points: Optional[int] = None, max_depth: Optional[int] = None,
                  polish_iter: Optional[int] = None) -> MirandaSolution:
    """x in [0,1]^n with max_i |f_i(x) - a_i| <= tol.

    f maps an (m, n) batch of cube points to an (m, n) batch of values. The box is bisected one
    axis at a time, keeping the lower half when both halves satisfy the sampled Miranda
    conditions and otherwise the half that violates them least; a pattern search polishes the
    best center found.
    """
    a = np.asarray(a, dtype=float)
    n = a.size
    if not tol > 0:
        raise PreconditionError(f"tolerance must be positive, got {tol}")
    points = boundary_points or settings.MIRANDA_BOUNDARY_POINTS
    max_depth = max_depth or settings.MIRANDA_MAX_DEPTH
    polish_iter = polish_iter or settings.MIRANDA_POLISH_ITER

    lo, hi = np.zeros(n), np.ones(n)
    violation = _violation(f, a, lo, hi, points)
    if violation > tol:
        raise PreconditionError(
            f"Miranda boundary condition fails by {violation:.3g} for target {a.tolist()}"
        )

    best = (lo + hi) / 2
    best_res = float(_residual(f, a, best)[0])
    depth = 0
    while depth < max_depth and best_res > tol:
        k = depth % n
        mid = (lo[k] + hi[k]) / 2
        low_hi, high_lo = hi.copy(), lo.copy()
        low_hi[k], high_lo[k] = mid, mid
        halves = [(lo, low_hi), (high_lo, hi)]
        scores = [_violation(f, a, h_lo, h_hi, points) for h_lo, h_hi in halves]
        admissible = [s <= settings.ABS_TOL for s in scores]
        pick = admissible.index(True) if any(admissible) else int(np.argmin(scores))
        lo, hi = halves[pick]
        depth += 1
        center = (lo + hi) / 2
        res = float(_residual(f, a, center)[0])
        if res < best_res:
            best, best_res = center, res

    directions = _pattern(n)
    step = float(np.max(hi - lo))
    for _ in range(polish_iter):
        if best_res <= tol or step < 1e-15:
            break
        candidates = np.clip(best + directions * step, 0.0, 1.0)
        residuals = _residual(f, a, candidates)
        k = int(np.argmin(residuals))
        if residuals[k] < best_res:
            best, best_res = candidates[k], float(residuals[k])
        else:
            step /= 2

    if best_res > tol:
        raise ConvergenceError(
            f"residual {best_res:.3g} above tolerance {tol} for target {a.tolist()}", best_res, a
        )
    return MirandaSolution(point=best.tolist(), residual=best_res, depth=depth)


def _check_metric(n: int, metric: TorusMetric, resolution: int):
    coarse = CubeSample(n=n, resolution=min(resolution, 9 if n <= 2 else 5), metric=metric)
    K = quasi_constant(coarse.matrix)
    if K > 1 + settings.REL_TOL:
        raise PreconditionError(f"face distances need a metric; the callback has K={K:.6g} on a coarse grid")


def witness_matrix(witnesses: np.ndarray, metric: TorusMetric) -> np.ndarray:
    W = np.asarray(witnesses, dtype=float)
    d = metric(W[:, None, :], W[None, :, :])
    d = np.minimum(d, d.T)
    np.fill_diagonal(d, 0.0)
    return d


def theorem3_witness(n: int, j: int, metric: Union[ProductMetricSpec, TorusMetric],
                     resolution: Optional[int] = None, tol: float = 1e-3,
                     cap: Optional[int] = None) -> WitnessSet:
    """2^{nj} cube points x_v with f(x_v) = v (up to tol) for v on the grid {C_n k / 2^j}^n.

    Targets differing by k grid steps on some axis force rho(x_v, x_v') >= k C_n / 2^j - 2 tol,
    so the witnesses form a (C_n / 2^j - 2 tol)-separated set of size 2^{nj}.
    """
    if n < 1 or j < 1:
        raise PreconditionError(f"need n >= 1 and j >= 1, got n={n}, j={j}")
    cap = cap or settings.GRID_CAP
    if n * j > 62 or 2 ** (n * j) > cap:
        raise CapExceededError(f"2^{n * j} witnesses exceed the cap {cap}")
    c = cube_sample(n, metric, resolution)
    _check_metric(n, c.metric, c.resolution)
    gap = face_gap(c)
    spacing = gap / 2 ** j
    bound = spacing - 2 * tol
    if not bound > 0:
        raise PreconditionError(f"tolerance {tol} swallows the target spacing {spacing:.6g}")
    targets = [spacing * np.array(k, dtype=float)
               for k in itertools.product(range(1, 2 ** j + 1), repeat=n)]

    def f(U: np.ndarray) -> np.ndarray:
        return face_distances(c, np.asarray(U) / 2)

    def solve(v: np.ndarray) -> MirandaSolution:
        try:
            return miranda_solve(f, v, tol)
        except ConvergenceError as e:
            raise ConvergenceError(f"no witness for target {v.tolist()}: {e}", e.best_residual, v)

    logger.info(f"Searching {len(targets)} witnesses: n={n}, j={j}, C_n={gap:.6g}, resolution={c.resolution}")
    solutions = parallel_map(solve, targets)
    witnesses = np.array([s.point for s in solutions]) / 2
    d = witness_matrix(witnesses, c.metric)
    min_pairwise = float(np.min(d[~np.eye(len(targets), dtype=bool)]))
    if min_pairwise > 0:
        separated_count = separated_set(DistanceMatrix(d), bound, exact=True).size
    else:
        separated_count = 1
    residuals = [s.residual for s in solutions]
    passed = bool(leq_tol(bound, min_pairwise)) and max(residuals) <= tol
    err = discretization_error(c)
    if not passed:
        logger.warning(f"Witness separation {min_pairwise:.6g} below {bound:.6g} for n={n}, j={j}")
    return WitnessSet(
        n=n,
        j=j,
        gap=gap,
        spacing=spacing,
        targets=[v.tolist() for v in targets],
        witnesses=witnesses.tolist(),
        residuals=residuals,
        tol=tol,
        discretization_error=err,
        effective_tol=tol + err,
        min_pairwise=min_pairwise,
        separation_bound=bound,
        separated_count=separated_count,
        passed=passed,
    )
