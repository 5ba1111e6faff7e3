from agents.graph_input import BallTableAnalysis, DoublingAnalysis
from agents.space_agent import require_space
from agents.state import ExperimentState, create_error_state, result_entry
from core.logging import get_logger
from utils.measure import cantor_ball_table, doubling_verdict, invariant_doubling_verdict
from utils.plots import emit_ratio_plot

logger = get_logger("doubling")


class DoublingAgent:
    def doubling(self, state: ExperimentState, index: int, spec: DoublingAnalysis) -> dict:
        """Doubling ratios at r = 2^-l and the sample-consistent-with-doubling verdict"""
        try:
            space = require_space(state)
            if space.measured is not None:
                report = doubling_verdict(space.measured, spec.l, threshold=spec.threshold)
            else:
                logger.info(f"Using the invariant sweep for the {space.info.get('points')}-point grid")
                report = invariant_doubling_verdict(space.invariant_row, spec.l, threshold=spec.threshold)

            rows = [
                {"index": index, "analysis": "doubling", "l": l, "radius": r, "ratio": q, "bound": "lower"}
                for l, r, q in zip(report.l_values, report.radii, report.ratios)
            ]
            svg = emit_ratio_plot(report.l_values, report.ratios, report.trend_slope)
            return {
                "results": [result_entry(index, "doubling", report.model_dump(mode="json"))],
                "tables": rows,
                "plots": [{"name": f"{index}_doubling", "svg": svg}],
            }

        except Exception as e:
            logger.error(f"Doubling analysis {index} failed: {e}")
            return create_error_state(f"Doubling failed: {str(e)}", "doubling", index=index)

    def ball_table(self, state: ExperimentState, index: int, spec: BallTableAnalysis) -> dict:
        """mu(B(x, 3^-n)) over all centers of the Cantor sample against 2^-n"""
        try:
            space = require_space(state)
            table = cantor_ball_table(space.require_cantor(), space.level)
            if not all(row.exact for row in table):
                logger.warning(f"Cantor ball masses deviate from 2^-n at level {space.level}")

            rows = [{"index": index, "analysis": "ball_table", **row.model_dump()} for row in table]
            return {
                "results": [result_entry(index, "ball_table", {"rows": [row.model_dump() for row in table]})],
                "tables": rows,
            }

        except Exception as e:
            logger.error(f"Ball table {index} failed: {e}")
            return create_error_state(f"Ball table failed: {str(e)}", "ball_table", index=index)
