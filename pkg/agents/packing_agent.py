from typing import Optional

from agents.graph_input import PackingAnalysis, ProfileAnalysis
from agents.space_agent import require_space
from agents.state import ExperimentState, create_error_state, result_entry
from core.logging import get_logger
from utils.packing import geometric_doubling_profile, packing_report
from utils.plots import emit_plot

logger = get_logger("packing")


class PackingAgent:
    def __init__(self, cap: Optional[int] = None):
        self.cap = cap

    def packing(self, state: ExperimentState, index: int, spec: PackingAnalysis) -> dict:
        """aleph lower bounds on the dyadic radii with the exponent fit and the log2 aleph plot"""
        try:
            matrix = require_space(state).require_matrix()
            report = packing_report(matrix, spec.l, exact=spec.exact, cap=self.cap)
            logger.info(f"Packing counts for l={report.l_values}: {report.counts}")

            rows = [
                {"index": index, "analysis": "packing", "l": l, "radius": r, "count": c, "exact": e, "bound": "lower"}
                for l, r, c, e in zip(report.l_values, report.radii, report.counts, report.exact)
            ]
            update = {
                "results": [result_entry(index, "packing", report.model_dump(mode="json"))],
                "tables": rows,
            }
            if report.fitted_exponent is not None:
                series = list(zip(report.l_values, report.counts))
                update["plots"] = [{"name": f"{index}_packing", "svg": emit_plot(series)}]
            return update

        except Exception as e:
            logger.error(f"Packing analysis {index} failed: {e}")
            return create_error_state(f"Packing failed: {str(e)}", "packing", index=index)

    def profile(self, state: ExperimentState, index: int, spec: ProfileAnalysis) -> dict:
        """Radius-r balls needed to cover B(x, 2r), per center and radius"""
        try:
            matrix = require_space(state).require_matrix()
            profile = geometric_doubling_profile(matrix, spec.radii, spec.centers,
                                                 exact=spec.exact, cap=self.cap)
            logger.info(f"Doubling profile maxima over radii {profile.radii}: {profile.max_per_radius}")

            rows = [
                {"index": index, "analysis": "profile", "radius": r, "max_count": c, "bound": "upper"}
                for r, c in zip(profile.radii, profile.max_per_radius)
            ]
            return {
                "results": [result_entry(index, "profile", profile.model_dump(mode="json"))],
                "tables": rows,
            }

        except Exception as e:
            logger.error(f"Profile analysis {index} failed: {e}")
            return create_error_state(f"Profile failed: {str(e)}", "profile", index=index)
