from agents.graph_input import MetrizeAnalysis, ValidateAnalysis
from agents.space_agent import require_space
from agents.state import ExperimentState, create_error_state, result_entry
from core.logging import get_logger
from utils.io import write_distance_csv
from utils.metric import validate_quasimetric
from utils.metrization import metrize_sample

logger = get_logger("metrize")


class MetrizeAgent:
    def validate(self, state: ExperimentState, index: int, spec: ValidateAnalysis) -> dict:
        """Quasimetric axioms and the quasi-triangle constant of the sample"""
        try:
            report = validate_quasimetric(require_space(state).require_matrix())
            logger.info(f"Validation: K={report.quasi_constant}, metric={report.is_metric}")
            return {
                "results": [result_entry(index, "validate", report.model_dump(mode="json"))],
                "tables": [{"index": index, "analysis": "validate", **report.model_dump()}],
            }

        except Exception as e:
            logger.error(f"Validation {index} failed: {e}")
            return create_error_state(f"Validation failed: {str(e)}", "validate", index=index)

    def metrize(self, state: ExperimentState, index: int, spec: MetrizeAnalysis) -> dict:
        """Chain metric with (2K)^q = 2 and the check rho_q <= rho^q <= 4 rho_q"""
        try:
            matrix = require_space(state).require_matrix()
            check, result = metrize_sample(matrix, spec.q)
            if spec.chain_path:
                write_distance_csv(result.chain, spec.chain_path)
                logger.info(f"Wrote chain metric to {spec.chain_path}")

            return {
                "results": [result_entry(index, "metrize", check.model_dump(mode="json"))],
                "tables": [{"index": index, "analysis": "metrize", **check.model_dump()}],
            }

        except Exception as e:
            logger.error(f"Metrization {index} failed: {e}")
            return create_error_state(f"Metrization failed: {str(e)}", "metrize", index=index)
