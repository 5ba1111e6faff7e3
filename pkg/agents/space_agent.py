from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from agents.graph_input import ExperimentConfig
from agents.state import ExperimentState, create_error_state
from core.config import settings
from core.errors import CapExceededError, PreconditionError
from core.logging import get_logger
from utils.io import read_distance_csv, read_measured_csv
from utils.measure import MeasuredSpace
from utils.metric import DistanceMatrix
from utils.spaces import cantor_space, log_line, product_metric, subgroup_distance_row, torus_grid

logger = get_logger("space")


@dataclass(eq=False)
class SampleSpace:
    """A constructed space: the dense matrix when it fits, its measure, and the identity row of an invariant grid."""
    kind: str
    measured: Optional[MeasuredSpace] = None
    invariant_row: Optional[np.ndarray] = None
    level: Optional[int] = None
    info: Dict[str, Any] = field(default_factory=dict)

    def require_matrix(self) -> DistanceMatrix:
        if self.measured is None:
            raise CapExceededError(
                f"{self.info.get('points')} points exceed the dense matrix cap {settings.MATRIX_CAP}; "
                "only translation-invariant sweeps are available for this space"
            )
        return self.measured.matrix

    def require_cantor(self) -> MeasuredSpace:
        if self.kind != "cantor" or self.measured is None:
            raise PreconditionError("the ball table needs a cantor space")
        return self.measured


def build_sample_space(spec) -> SampleSpace:
    if spec.type == "torus_grid":
        points = torus_grid(spec.n, spec.j)
        row = subgroup_distance_row(spec.n, spec.j, spec.metric)
        measured = None
        if points.size <= settings.MATRIX_CAP:
            measured = MeasuredSpace.uniform(product_metric(points, spec.metric), points)
        return SampleSpace("torus_grid", measured, row,
                           info={"points": points.size, "metric": spec.metric.kind})
    if spec.type == "cantor":
        space = cantor_space(spec.level)
        return SampleSpace("cantor", space, level=spec.level, info={"points": space.matrix.n})
    if spec.type == "log_line":
        lo, hi = spec.points.range
        xs = np.linspace(lo, hi, spec.points.count)
        return SampleSpace("log_line", MeasuredSpace.uniform(log_line(xs)), info={"points": xs.size})
    if spec.type == "matrix_csv":
        matrix = read_distance_csv(spec.path)
        return SampleSpace("matrix_csv", MeasuredSpace.uniform(matrix), info={"points": matrix.n})
    measured = read_measured_csv(spec.path)
    return SampleSpace("measured_csv", measured, info={"points": measured.matrix.n})


class SpaceAgent:
    def build_space(self, state: ExperimentState) -> dict:
        """Construct the configured space once for every analysis node"""
        config = ExperimentConfig.model_validate(state["config"])
        if config.space is None:
            return {"space": None, "space_info": None}

        try:
            space = build_sample_space(config.space)
            logger.info(f"Built {space.kind} space: {space.info}")
            return {
                "space": space,
                "space_info": {"type": space.kind, **space.info},
            }
        except Exception as e:
            logger.error(f"Failed to build space: {e}")
            return {"space": None, **create_error_state(f"Space construction failed: {str(e)}", "build_space")}


def require_space(state: ExperimentState) -> SampleSpace:
    space = state.get("space")
    if space is None:
        raise PreconditionError("no space is available (construction failed or none configured)")
    return space
