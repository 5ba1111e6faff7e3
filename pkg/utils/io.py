"""CSV and JSON readers and writers for distance matrices, measured spaces and report tables.

Matrix CSV: a `label` column followed by one column per point, in the same order as the rows.
Measured-space CSV: the same with a trailing `weight` column.
"""
import os
from typing import Any, Dict, List

import numpy as np
import pandas as pd
from pydantic import BaseModel

from core.config import settings
from core.errors import StructuralError
from core.logging import get_logger
from utils.measure import MeasuredSpace
from utils.metric import DistanceMatrix

logger = get_logger("io")

FLOAT_FORMAT = "%.17g"


def ensure_parent(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _read_frame(path: str, what: str) -> pd.DataFrame:
    """Every cell as text so labels like 01, 1.50 or NA survive; the label column becomes the index."""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise StructuralError(f"cannot read {what} from {path}: {e}")
    if len(frame.columns) == 0 or frame.columns[0] != "label":
        raise StructuralError(f"{path}: the first header cell must be 'label'")
    return frame.set_index("label")


def _numeric(values: pd.DataFrame, source: str) -> np.ndarray:
    try:
        return values.to_numpy(dtype=float)
    except ValueError as e:
        raise StructuralError(f"{source}: non-numeric entry ({e})")


def _matrix_from_frame(frame: pd.DataFrame, source: str) -> DistanceMatrix:
    labels = list(frame.index)
    columns = list(frame.columns)
    if columns != labels:
        raise StructuralError(f"{source}: column labels do not match row labels")
    d = _numeric(frame, source)
    if not np.all(np.isfinite(d)):
        raise StructuralError(f"{source}: distance matrix contains NaN or infinite entries")
    asymmetry = float(np.max(np.abs(d - d.T))) if d.size else 0.0
    if asymmetry > settings.SYMMETRY_TOL:
        raise StructuralError(f"{source}: matrix is not symmetric (max deviation {asymmetry:.3g})")
    d = (d + d.T) / 2
    return DistanceMatrix(d, tuple(labels))


def read_distance_csv(path: str) -> DistanceMatrix:
    frame = _read_frame(path, "distance matrix")
    logger.debug(f"Read {len(frame)}-point distance matrix from {path}")
    return _matrix_from_frame(frame, path)


def read_measured_csv(path: str) -> MeasuredSpace:
    frame = _read_frame(path, "measured space")
    if len(frame.columns) == 0 or frame.columns[-1] != "weight":
        raise StructuralError(f"{path}: the last column must be 'weight'")
    weights = _numeric(frame[["weight"]], path).ravel()
    matrix = _matrix_from_frame(frame.drop(columns="weight"), path)
    logger.debug(f"Read {matrix.n}-point measured space from {path}")
    return MeasuredSpace(matrix, weights)


def _frame(m: DistanceMatrix) -> pd.DataFrame:
    labels = m.label_list()
    frame = pd.DataFrame(m.d, index=labels, columns=labels)
    frame.index.name = "label"
    return frame


def write_distance_csv(m: DistanceMatrix, path: str):
    ensure_parent(path)
    _frame(m).to_csv(path, float_format=FLOAT_FORMAT)


def write_measured_csv(s: MeasuredSpace, path: str):
    ensure_parent(path)
    frame = _frame(s.matrix)
    frame["weight"] = s.weights
    frame.to_csv(path, float_format=FLOAT_FORMAT)


def table_csv(rows: List[Dict[str, Any]]) -> str:
    """One CSV row per record; columns in first-seen key order."""
    columns: List[str] = []
    for row in rows:
        columns.extend(k for k in row if k not in columns)
    return pd.DataFrame(rows, columns=columns).to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_table(rows: List[Dict[str, Any]], path: str):
    ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(table_csv(rows))


def write_json(model: BaseModel, path: str):
    ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(model.model_dump_json(indent=2, by_alias=True))
        f.write("\n")
