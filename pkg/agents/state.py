from typing import TypedDict, List, Optional, Any, Dict, Annotated
import operator


class ExperimentState(TypedDict):
    config: Dict[str, Any]

    space: Optional[Any]
    space_info: Optional[Dict[str, Any]]

    results: Annotated[List[Dict[str, Any]], operator.add]
    tables: Annotated[List[Dict[str, Any]], operator.add]
    plots: Annotated[List[Dict[str, str]], operator.add]
    errors: Annotated[List[Dict[str, Any]], operator.add]

    metadata: Dict[str, Any]


def create_error_state(error_msg: str, stage: str, **kwargs) -> dict:
    """Helper to create consistent error state"""
    return {
        "errors": [{
            "stage": stage,
            "error": error_msg,
            **kwargs
        }]
    }


def result_entry(index: int, kind: str, result: Dict[str, Any]) -> Dict[str, Any]:
    return {"index": index, "analysis": kind, "result": result}
