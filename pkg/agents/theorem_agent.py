import math
from typing import Optional

from agents.graph_input import Theorem2Analysis, Theorem3Analysis
from agents.state import ExperimentState, create_error_state, result_entry
from core.errors import ConvergenceError
from core.logging import get_logger
from utils.miranda import theorem3_witness
from utils.plots import emit_plot
from utils.spaces import theorem2_report

logger = get_logger("theorem")


class TheoremAgent:
    def __init__(self, cap: Optional[int] = None):
        self.cap = cap

    def theorem2(self, state: ExperimentState, index: int, spec: Theorem2Analysis) -> dict:
        """Separated subgroup grids E_{n,j} of the torus under an invariant product metric"""
        try:
            report = theorem2_report(spec.n, spec.j, spec.metric, cap=self.cap)
            logger.info(f"Theorem 2 grids for n={spec.n}: exponent {report.fitted_exponent}, passed={report.passed}")

            rows = [{"index": index, "analysis": "theorem2", "n": spec.n, **row.model_dump()} for row in report.rows]
            update = {
                "results": [result_entry(index, "theorem2", report.model_dump(mode="json"))],
                "tables": rows,
            }
            if report.fitted_exponent is not None:
                series = [(-math.log2(row.r), row.aleph) for row in report.rows]
                update["plots"] = [{"name": f"{index}_theorem2", "svg": emit_plot(series, title=f"E_(n,j), n={spec.n}")}]
            return update

        except Exception as e:
            logger.error(f"Theorem 2 analysis {index} failed: {e}")
            return create_error_state(f"Theorem 2 failed: {str(e)}", "theorem2", index=index)

    def theorem3(self, state: ExperimentState, index: int, spec: Theorem3Analysis) -> dict:
        """Poincare-Miranda witnesses x_v for the face-distance map on the cube"""
        try:
            witnesses = theorem3_witness(spec.n, spec.j, spec.metric, spec.resolution, spec.tol)
            logger.info(f"Theorem 3 witnesses: min pairwise {witnesses.min_pairwise:.6g}, passed={witnesses.passed}")

            rows = [
                {"index": index, "analysis": "theorem3", "target": " ".join(f"{t:.17g}" for t in v),
                 "witness": " ".join(f"{x:.17g}" for x in x_v), "residual": res}
                for v, x_v, res in zip(witnesses.targets, witnesses.witnesses, witnesses.residuals)
            ]
            return {
                "results": [result_entry(index, "theorem3", witnesses.model_dump(mode="json"))],
                "tables": rows,
            }

        except ConvergenceError as e:
            logger.error(f"Theorem 3 analysis {index} did not converge: {e}")
            return create_error_state(f"Theorem 3 failed: {str(e)}", "theorem3", index=index,
                                      best_residual=e.best_residual, target=e.target)
        except Exception as e:
            logger.error(f"Theorem 3 analysis {index} failed: {e}")
            return create_error_state(f"Theorem 3 failed: {str(e)}", "theorem3", index=index)
