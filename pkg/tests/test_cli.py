"""
End-to-end tests of the command line and the experiment graph: exit codes, report
contents, CSV tables, SVG plots and byte-identical reruns.
"""
import json

import pytest
from pydantic import ValidationError

from agents.graph_input import ExperimentConfig, parse_range
from main import ExperimentRunner, main, plot_paths
from utils.io import read_distance_csv, write_distance_csv, write_measured_csv
from utils.measure import MeasuredSpace
from utils.metric import DistanceMatrix


@pytest.fixture
def matrix_csv(tmp_path):
    path = str(tmp_path / "m.csv")
    write_distance_csv(DistanceMatrix([[0, 1, 4], [1, 0, 1], [4, 1, 0]], labels=("a", "b", "c")), path)
    return path


def read_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def test_parse_range():
    assert parse_range("1..4") == [1, 2, 3, 4]
    assert parse_range("dyadic:2..3") == [2, 3]
    assert parse_range("5") == [5]
    assert parse_range("1,3") == [1, 3]
    assert parse_range([2, 4]) == [2, 4]
    with pytest.raises(ValueError):
        parse_range("4..1")
    with pytest.raises(ValueError):
        parse_range("a..b")


def test_config_requires_a_space():
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate({"analyses": [{"kind": "doubling", "l": "1..3"}]})
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate({"space": {"type": "log_line", "points": {"range": [-1, 1], "count": 5}},
                                         "analyses": [{"kind": "ball_table"}]})
    ExperimentConfig.model_validate({"analyses": [{"kind": "theorem2", "n": 1, "j": "1..2"}]})


def test_plot_paths():
    assert plot_paths("out.svg", ["0_packing"]) == ["out.svg"]
    assert plot_paths("out.svg", ["0_a", "1_b"]) == ["out_0_a.svg", "out_1_b.svg"]


def test_validate_command(tmp_path, matrix_csv):
    out = str(tmp_path / "r.json")
    assert main(["validate", "--input", matrix_csv, "--out", out]) == 0
    report = read_json(out)
    assert report["schema"] == 1
    assert report["results"][0]["result"]["quasi_constant"] == pytest.approx(2.0)
    assert report["space"]["points"] == 3


def test_metrize_out_is_the_chain_csv(tmp_path, matrix_csv):
    report, chain = str(tmp_path / "r.json"), str(tmp_path / "chain.csv")
    assert main(["metrize", "--input", matrix_csv, "--out", chain, "--report", report]) == 0
    result = read_json(report)["results"][1]["result"]
    assert result["passed"]
    assert result["q"] == pytest.approx(0.5)
    assert result["bound"] == "lower"
    assert open(chain).readline().strip() == "label,a,b,c"
    assert read_distance_csv(chain).d[0, 2] == pytest.approx(2.0)


def test_metrize_with_explicit_q(tmp_path, matrix_csv):
    report, chain = str(tmp_path / "r.json"), str(tmp_path / "chain.csv")
    assert main(["metrize", "--input", matrix_csv, "--out", chain, "--q", "0.25", "--report", report]) == 0
    result = read_json(report)["results"][1]["result"]
    assert result["q"] == pytest.approx(0.25)
    # 4^0.25 beats the two-step chain 1 + 1
    assert read_distance_csv(chain).d[0, 2] == pytest.approx(2 ** 0.5)
    assert main(["metrize", "--input", matrix_csv, "--q", "1.5"]) == 2


def test_packing_command_with_radii(tmp_path, matrix_csv):
    out = str(tmp_path / "r.json")
    assert main(["packing", "--input", matrix_csv, "--radii", "dyadic:-2..0", "--exact", "--out", out]) == 0
    result = read_json(out)["results"][0]["result"]
    assert result["radii"] == [4.0, 2.0, 1.0]
    assert result["counts"] == [2, 2, 3]
    assert result["exact"] == [True, True, True]
    assert set(result["fit"]) == {"N", "C"}
    assert result["fit"]["N"] == pytest.approx(result["fitted_exponent"])


def test_packing_command_as_csv(tmp_path, matrix_csv):
    out = str(tmp_path / "t.csv")
    assert main(["packing", "--input", matrix_csv, "--l", "dyadic:-2..0", "--exact", "--format", "csv",
                 "--out", out]) == 0
    lines = open(out).read().splitlines()
    assert lines[0].startswith("index,analysis,l,radius,count,exact,bound")
    assert len(lines) == 4


def test_doubling_command(tmp_path):
    path = str(tmp_path / "s.csv")
    write_measured_csv(MeasuredSpace(DistanceMatrix([[0, 0.5], [0.5, 0]]), [1.0, 1.0]), path)
    out, svg = str(tmp_path / "r.json"), str(tmp_path / "ratios.svg")
    assert main(["doubling", "--input", path, "--l", "1..3", "--out", out, "--svg", svg]) == 0
    result = read_json(out)["results"][0]["result"]
    assert result["ratios"] == [2.0, 1.0, 1.0]
    assert open(svg, encoding="utf-8").read().lstrip().startswith("<?xml")


def test_theorem2_command(tmp_path):
    out = str(tmp_path / "r.json")
    assert main(["theorem2", "--n", "2", "--j", "1..3", "--metric", "sup", "--out", out]) == 0
    result = read_json(out)["results"][0]["result"]
    assert result["passed"]
    assert result["fitted_exponent"] == pytest.approx(2.0)
    assert [row["aleph"] for row in result["rows"]] == [4, 16, 64]


def test_theorem3_command(tmp_path):
    out = str(tmp_path / "r.json")
    assert main(["theorem3", "--n", "1", "--j", "2", "--resolution", "17", "--out", out]) == 0
    result = read_json(out)["results"][0]["result"]
    assert result["passed"]
    assert result["separated_count"] == 4


def test_cantor_preset(tmp_path):
    out = str(tmp_path / "r.json")
    assert main(["cantor", "--level", "6", "--l", "1..4", "--packing-l", "2..5", "--out", out]) == 0
    results = read_json(out)["results"]
    assert [r["analysis"] for r in results] == ["doubling", "ball_table", "packing"]
    assert all(row["exact"] for row in results[1]["result"]["rows"])
    assert results[0]["result"]["consistent_with_doubling"]


def test_logline_preset(tmp_path):
    out = str(tmp_path / "r.json")
    assert main(["logline", "--span", "4", "--count", "129", "--radii", "1,2", "--out", out]) == 0
    profile = read_json(out)["results"][0]["result"]
    assert profile["max_per_radius"][0] < profile["max_per_radius"][1]


def test_run_command_with_config(tmp_path):
    config = {
        "space": {"type": "torus_grid", "n": 2, "j": 3, "metric": {"kind": "weighted_sum"}},
        "analyses": [{"kind": "validate"}, {"kind": "doubling", "l": "1..5"}, {"kind": "packing", "l": "1..5"}],
    }
    config_path = tmp_path / "c.json"
    config_path.write_text(json.dumps(config))
    out = str(tmp_path / "r.json")
    assert main(["run", "--config", str(config_path), "--out", out]) == 0
    report = read_json(out)
    assert [r["index"] for r in report["results"]] == [0, 1, 2]
    assert report["results"][0]["result"]["is_metric"]
    assert report["errors"] == []


def test_invalid_configuration_exits_with_two(tmp_path):
    assert main(["theorem2", "--n", "0"]) == 2
    assert main(["run", "--config", str(tmp_path / "absent.json")]) == 2


def test_runtime_failure_exits_with_one(tmp_path):
    out = str(tmp_path / "r.json")
    assert main(["validate", "--input", str(tmp_path / "absent.csv"), "--out", out]) == 1
    stages = [e["stage"] for e in read_json(out)["errors"]]
    assert stages == ["build_space", "validate"]


def test_reruns_are_byte_identical(tmp_path):
    out, svg = str(tmp_path / "r.json"), str(tmp_path / "p.svg")
    argv = ["cantor", "--level", "5", "--l", "1..4", "--packing-l", "2..4", "--out", out, "--svg", svg]
    snapshots = []
    for _ in range(2):
        assert main(argv) == 0
        snapshots.append((open(out, "rb").read(), open(str(tmp_path / "p_0_doubling.svg"), "rb").read()))
    assert snapshots[0] == snapshots[1]


def test_runner_keeps_analysis_order():
    config = ExperimentConfig.model_validate({
        "space": {"type": "cantor", "level": 4},
        "analyses": [{"kind": "ball_table"}, {"kind": "doubling", "l": "1..3"}],
    })
    report, result = ExperimentRunner(config).run()
    assert [r["analysis"] for r in report.results] == ["ball_table", "doubling"]
    assert [p["name"] for p in result["plots"]] == ["1_doubling"]
