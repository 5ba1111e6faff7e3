"""Finite quasimetric samples: validation, the quasi-triangle constant, equivalence and balls.

Every quantity here is sample-level: it is computed on the finite matrix it is given and
bounds (never equals by proof) the corresponding quantity of the underlying space.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, Field, model_validator

from core.config import settings
from core.errors import PreconditionError, StructuralError
from core.logging import get_logger
from core.parallel import parallel_map

logger = get_logger("metric")


def leq_tol(a, b, rel: Optional[float] = None, abs_floor: Optional[float] = None):
    """a <= b up to relative tolerance with an absolute floor (elementwise for arrays)."""
    rel = settings.REL_TOL if rel is None else rel
    abs_floor = settings.ABS_TOL if abs_floor is None else abs_floor
    return np.asarray(a) <= np.asarray(b) + np.maximum(rel * np.abs(b), abs_floor)


def _as_square(d: ArrayLike) -> np.ndarray:
    try:
        arr = np.array(d, dtype=float)
    except (TypeError, ValueError) as e:
        raise StructuralError(f"distance data is not numeric: {e}")
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise StructuralError(f"distance matrix must be a non-empty square array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise StructuralError("distance matrix contains NaN or infinite entries")
    if np.any(arr < 0):
        raise StructuralError("distance matrix contains negative entries")
    return arr


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric, zero-diagonal, positive off-diagonal matrix over an indexed point set."""
    d: np.ndarray
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        arr = _as_square(self.d)
        n = arr.shape[0]
        if np.any(np.diag(arr) != 0):
            raise StructuralError("distance matrix must have a zero diagonal")
        if not np.array_equal(arr, arr.T):
            raise StructuralError("distance matrix must be exactly symmetric")
        if n > 1 and np.any(arr[~np.eye(n, dtype=bool)] <= 0):
            raise StructuralError("distinct points must be at positive distance")
        if self.labels is not None:
            labels = tuple(str(label) for label in self.labels)
            if len(labels) != n:
                raise StructuralError(f"expected {n} labels, got {len(labels)}")
            object.__setattr__(self, "labels", labels)
        arr.setflags(write=False)
        object.__setattr__(self, "d", arr)

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def label_list(self) -> List[str]:
        return list(self.labels) if self.labels is not None else [str(i) for i in range(self.n)]

    def submatrix(self, indices: Sequence[int]) -> "DistanceMatrix":
        idx = np.asarray(indices, dtype=int)
        labels = None if self.labels is None else tuple(self.labels[i] for i in idx)
        return DistanceMatrix(self.d[np.ix_(idx, idx)], labels)

    def scaled(self, c: float) -> "DistanceMatrix":
        return DistanceMatrix(self.d * c, self.labels)


class ValidationReport(BaseModel):
    n: int
    symmetric: bool
    positive_off_diagonal: bool
    zero_diagonal: bool
    quasi_constant: Optional[float] = Field(None, description="least admissible K on the sample")
    is_metric: bool
    bound: str = "lower"

    @model_validator(mode="after")
    def check_metric_flag(self):
        if self.is_metric and (self.quasi_constant is None or self.quasi_constant > 1 + settings.REL_TOL):
            raise ValueError("is_metric requires quasi_constant <= 1 + eps")
        return self


class Ball(BaseModel):
    center: int
    radius: float = Field(..., gt=0)
    members: Tuple[int, ...]


def validate_quasimetric(m: Union[DistanceMatrix, ArrayLike]) -> ValidationReport:
    """Check the quasimetric axioms on a sample and compute its quasi-triangle constant."""
    arr = m.d if isinstance(m, DistanceMatrix) else _as_square(m)
    n = arr.shape[0]
    off = ~np.eye(n, dtype=bool)
    symmetric = bool(np.array_equal(arr, arr.T))
    zero_diagonal = bool(np.all(np.diag(arr) == 0))
    positive = bool(np.all(arr[off] > 0)) if n > 1 else True

    K = None
    if symmetric and zero_diagonal and positive:
        matrix = m if isinstance(m, DistanceMatrix) else DistanceMatrix(arr)
        K = quasi_constant(matrix)
    is_metric = K is not None and K <= 1 + settings.REL_TOL
    logger.debug(f"Validated {n}-point sample: symmetric={symmetric}, K={K}")
    return ValidationReport(
        n=n,
        symmetric=symmetric,
        positive_off_diagonal=positive,
        zero_diagonal=zero_diagonal,
        quasi_constant=K,
        is_metric=is_metric,
    )


def _max_ratio_through(d: np.ndarray, ks: Sequence[int]) -> float:
    n = d.shape[0]
    best = 0.0
    for k in ks:
        denom = d[:, k][:, None] + d[k, :][None, :]
        mask = np.ones((n, n), dtype=bool)
        mask[k, :] = False
        mask[:, k] = False
        np.fill_diagonal(mask, False)
        if mask.any():
            best = max(best, float(np.max(d[mask] / denom[mask])))
    return best


def quasi_constant(m: DistanceMatrix) -> float:
    """Least K with d(i,j) <= K (d(i,k) + d(k,j)) over all triples of the sample; 1 if none."""
    n = m.n
    if n < 3:
        return 1.0
    chunks = np.array_split(np.arange(n), min(n, max(1, settings.THREADS)))
    ratios = parallel_map(lambda ks: _max_ratio_through(m.d, ks), chunks)
    return max(1.0, *ratios)


def power_transform(m: DistanceMatrix, alpha: float) -> DistanceMatrix:
    if not alpha > 0:
        raise PreconditionError(f"power exponent must be positive, got {alpha}")
    return DistanceMatrix(np.power(m.d, alpha), m.labels)


def equivalence_constant(m1: DistanceMatrix, m2: DistanceMatrix) -> float:
    """Least M with m1/M <= m2 <= M m1 entrywise."""
    if m1.n != m2.n:
        raise StructuralError(f"point counts differ: {m1.n} vs {m2.n}")
    if m1.n == 1:
        return 1.0
    off = ~np.eye(m1.n, dtype=bool)
    a, b = m1.d[off], m2.d[off]
    if np.any((a == 0) != (b == 0)):
        raise StructuralError("an off-diagonal entry vanishes in exactly one matrix")
    ratio = b / a
    return float(max(1.0, np.max(ratio), np.max(1.0 / ratio)))


def ball(m: DistanceMatrix, center: int, r: float) -> Ball:
    """B(center, r) = {i : d(center, i) < r}; strict inequality, no tolerance."""
    if not r > 0:
        raise PreconditionError(f"ball radius must be positive, got {r}")
    if not 0 <= center < m.n:
        raise PreconditionError(f"center {center} outside 0..{m.n - 1}")
    members = np.flatnonzero(m.d[center] < r)
    return Ball(center=center, radius=r, members=tuple(int(i) for i in members))


def _radius_grid(m1: DistanceMatrix, m2: DistanceMatrix) -> np.ndarray:
    values = np.unique(np.concatenate([m1.d.ravel(), m2.d.ravel()]))
    values = values[values > 0]
    if values.size == 0:
        return np.array([1.0])
    mids = np.sqrt(values[:-1] * values[1:])
    return np.unique(np.concatenate([values, mids, [2 * values[-1]]]))


def ball_nesting_check(m1: DistanceMatrix, m2: DistanceMatrix, M: float,
                       radii: Optional[Sequence[float]] = None) -> bool:
    """B1(x, r/M) ⊆ B2(x, r) ⊆ B1(x, M r) for every center and every radius of the grid."""
    if M < 1:
        raise PreconditionError(f"equivalence constant must be at least 1, got {M}")
    if m1.n != m2.n:
        raise StructuralError(f"point counts differ: {m1.n} vs {m2.n}")
    grid = np.asarray(radii, dtype=float) if radii is not None else _radius_grid(m1, m2)
    M_eff = M * (1 + settings.REL_TOL)
    for r in grid:
        inner = m1.d < r / M_eff
        middle = m2.d < r
        outer = m1.d < M_eff * r
        if np.any(inner & ~middle) or np.any(middle & ~outer):
            logger.info(f"Ball nesting fails at radius {r} with M={M}")
            return False
    return True


def random_quasimetric(n: int, rng: np.random.Generator, low: float = 0.1, high: float = 1.0) -> DistanceMatrix:
    """Off-diagonal entries uniform in [low, high], symmetrized by mirroring the upper triangle."""
    if not 0 < low <= high:
        raise PreconditionError(f"need 0 < low <= high, got low={low}, high={high}")
    upper = np.triu(rng.uniform(low, high, size=(n, n)), k=1)
    return DistanceMatrix(upper + upper.T)
