"""Chain metrization of a quasimetric sample.

For q in (0, 1] the chain metric is rho_q(x, y) = inf over chains x = x_0, ..., x_n = y of
sum rho(x_j, x_{j-1})^q. On a finite sample with positive weights the infimum is attained by a
simple path, so it is an all-pairs shortest path on the complete graph weighted by d^q.
With (2K)^q = 2 one has rho_q <= rho^q <= 4 rho_q.
"""
import math
from dataclasses import dataclass
from itertools import permutations
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel
from scipy.sparse.csgraph import floyd_warshall

from core.config import settings
from core.errors import CapExceededError, PreconditionError
from core.logging import get_logger
from utils.metric import DistanceMatrix, leq_tol, quasi_constant

logger = get_logger("metrize")


@dataclass(frozen=True, eq=False)
class MetrizationResult:
    q: float
    chain: DistanceMatrix
    powered: DistanceMatrix
    max_sandwich_ratio: float

    def summary(self) -> dict:
        return {"q": self.q, "n": self.chain.n, "max_sandwich_ratio": self.max_sandwich_ratio}


class SandwichCheck(BaseModel):
    passed: bool
    quasi_constant: float
    q: float
    max_sandwich_ratio: float
    chain_quasi_constant: float
    bound: str = "lower"


def exponent_q(K: float) -> float:
    """The q in (0, 1] with (2K)^q = 2."""
    if not K >= 1:
        raise PreconditionError(f"quasi-triangle constant must be at least 1, got {K}")
    return math.log(2) / math.log(2 * K)


def _sandwich_ratio(powered: np.ndarray, chain: np.ndarray) -> float:
    n = powered.shape[0]
    if n < 2:
        return 1.0
    off = ~np.eye(n, dtype=bool)
    return float(np.max(powered[off] / chain[off]))


def chain_metric(m: DistanceMatrix, q: float) -> MetrizationResult:
    if not 0 < q <= 1:
        raise PreconditionError(f"chain exponent must lie in (0, 1], got {q}")
    if m.n > settings.APSP_CAP:
        raise CapExceededError(
            f"{m.n} points exceed the all-pairs shortest path cap {settings.APSP_CAP}; subsample first"
        )
    powered = np.power(m.d, q)
    chain = floyd_warshall(powered, directed=False)
    # reverse paths may sum in a different order
    chain = np.minimum(chain, chain.T)
    np.fill_diagonal(chain, 0.0)
    logger.debug(f"Chain metric on {m.n} points with q={q}")
    return MetrizationResult(
        q=q,
        chain=DistanceMatrix(chain, m.labels),
        powered=DistanceMatrix(powered, m.labels),
        max_sandwich_ratio=_sandwich_ratio(powered, chain),
    )


def chain_metric_bruteforce(m: DistanceMatrix, q: float) -> np.ndarray:
    """Minimum over every simple chain, by enumeration; an oracle for small samples (n <= 8)."""
    if m.n > 8:
        raise CapExceededError("exhaustive chain enumeration is limited to 8 points")
    powered = np.power(m.d, q)
    n = m.n
    best = powered.copy()
    for i in range(n):
        for j in range(i + 1, n):
            others = [k for k in range(n) if k not in (i, j)]
            for length in range(1, len(others) + 1):
                for middle in permutations(others, length):
                    path = (i, *middle, j)
                    total = sum(powered[a, b] for a, b in zip(path, path[1:]))
                    if total < best[i, j]:
                        best[i, j] = best[j, i] = total
    return best


def metrize_sample(m: DistanceMatrix, q: Optional[float] = None) -> Tuple[SandwichCheck, MetrizationResult]:
    """Chain metric of the sample and the check chain <= powered <= 4 chain.

    q defaults to exponent_q(K). The upper half of the sandwich is only guaranteed for
    q <= exponent_q(K); a larger q is run as given and reported as failed when it breaks.
    """
    K = quasi_constant(m)
    if q is None:
        q = exponent_q(K)
    result = chain_metric(m, q)
    chain, powered = result.chain.d, result.powered.d
    passed = bool(np.all(leq_tol(chain, powered)) and np.all(leq_tol(powered, 4 * chain)))
    if not passed:
        logger.warning(f"Sandwich bound violated: K={K}, q={q}, ratio={result.max_sandwich_ratio}")
    return SandwichCheck(
        passed=passed,
        quasi_constant=K,
        q=q,
        max_sandwich_ratio=result.max_sandwich_ratio,
        chain_quasi_constant=quasi_constant(result.chain),
    ), result


def sandwich_check(m: DistanceMatrix, q: Optional[float] = None) -> SandwichCheck:
    return metrize_sample(m, q)[0]
