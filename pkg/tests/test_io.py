"""
Tests for utils.io and utils.plots: CSV readers, report writers and byte-stable SVG output.
"""
import json

import numpy as np
import pytest

from agents.graph_input import Provenance, Report
from core.errors import PreconditionError, StructuralError
from utils.io import (read_distance_csv, read_measured_csv, table_csv, write_distance_csv, write_json,
                      write_measured_csv)
from utils.measure import MeasuredSpace
from utils.metric import DistanceMatrix
from utils.plots import emit_plot, emit_ratio_plot, write_svg


@pytest.fixture
def labelled():
    return DistanceMatrix([[0, 0.1, 1 / 3], [0.1, 0, 0.7], [1 / 3, 0.7, 0]], labels=("a", "b", "c"))


def test_distance_csv_keeps_labels_and_every_digit(tmp_path, labelled):
    path = str(tmp_path / "m.csv")
    write_distance_csv(labelled, path)
    back = read_distance_csv(path)
    assert back.labels == ("a", "b", "c")
    assert np.array_equal(back.d, labelled.d)
    assert open(path).readline().strip() == "label,a,b,c"


def test_numeric_labels_are_read_as_strings(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("label,1,2\n1,0,2\n2,2,0\n")
    assert read_distance_csv(str(path)).labels == ("1", "2")


@pytest.mark.parametrize("labels", [("01", "02"), ("1.50", "2"), ("NA", "b")])
def test_number_like_labels_round_trip(tmp_path, labels):
    path = str(tmp_path / "m.csv")
    m = DistanceMatrix([[0, 0.5], [0.5, 0]], labels=labels)
    write_distance_csv(m, path)
    assert read_distance_csv(path).labels == labels
    measured = str(tmp_path / "s.csv")
    write_measured_csv(MeasuredSpace(m, [1.0, 2.0]), measured)
    assert read_measured_csv(measured).matrix.labels == labels


def test_first_header_cell_must_be_label(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("name,a,b\na,0,1\nb,1,0\n")
    with pytest.raises(StructuralError):
        read_distance_csv(str(path))


def test_near_symmetric_input_is_averaged(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("label,a,b\na,0,1.0000000000000002\nb,1,0\n")
    m = read_distance_csv(str(path))
    assert m.d[0, 1] == m.d[1, 0]


@pytest.mark.parametrize("text", [
    "label,a,b\na,0,1\nb,2,0\n",
    "label,a,c\na,0,1\nb,1,0\n",
    "label,a,b\na,0,x\nb,1,0\n",
    "label,a,b\na,0,1\nb,1,1\n",
])
def test_malformed_matrices_are_rejected(tmp_path, text):
    path = tmp_path / "m.csv"
    path.write_text(text)
    with pytest.raises(StructuralError):
        read_distance_csv(str(path))


def test_missing_file_is_a_structural_error(tmp_path):
    with pytest.raises(StructuralError):
        read_distance_csv(str(tmp_path / "absent.csv"))


def test_measured_csv(tmp_path, labelled):
    path = str(tmp_path / "nested" / "s.csv")
    write_measured_csv(MeasuredSpace(labelled, [0.5, 0.25, 0.25]), path)
    back = read_measured_csv(path)
    assert back.weights.tolist() == [0.5, 0.25, 0.25]
    assert back.matrix.labels == ("a", "b", "c")


def test_measured_csv_needs_a_weight_column(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("label,a,b,mass\na,0,1,1\nb,1,0,1\n")
    with pytest.raises(StructuralError):
        read_measured_csv(str(path))


def test_table_columns_follow_first_seen_order():
    text = table_csv([{"l": 1, "count": 2}, {"l": 2, "count": 4, "exact": True}])
    assert text.splitlines() == ["l,count,exact", "1,2,", "2,4,True"]


def test_report_json_uses_the_schema_key(tmp_path):
    report = Report(config={}, provenance=Provenance(version="0.1.0", seed=0, tolerances={}, caps={}))
    path = str(tmp_path / "r.json")
    write_json(report, path)
    data = json.load(open(path))
    assert data["schema"] == 1
    assert data["provenance"]["tool"] == "doubleprobe"


def test_plots_are_byte_stable(tmp_path):
    series = [(1, 2), (2, 4), (3, 8)]
    first, second = emit_plot(series), emit_plot(series)
    assert first == second
    assert "≈1.0" in first
    assert emit_ratio_plot([1, 2], [2.0, 2.5], 0.2) == emit_ratio_plot([1, 2], [2.0, 2.5], 0.2)
    path = str(tmp_path / "p.svg")
    write_svg(first, path)
    assert open(path, encoding="utf-8").read() == first


def test_plot_needs_two_points():
    with pytest.raises(PreconditionError):
        emit_plot([(1, 2)])
