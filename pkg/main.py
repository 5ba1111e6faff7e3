from langgraph.graph import StateGraph, END
from pydantic import ValidationError
from typing import Callable, Dict, List, Optional, Tuple
import argparse
import json
import math
import os
import sys

from core import __version__
from core.config import settings
from core.logging import get_logger
from agents.doubling_agent import DoublingAgent
from agents.graph_input import ExperimentConfig, Provenance, Report
from agents.metrize_agent import MetrizeAgent
from agents.packing_agent import PackingAgent
from agents.space_agent import SpaceAgent
from agents.state import ExperimentState
from agents.theorem_agent import TheoremAgent
from utils.io import table_csv, write_json, write_table
from utils.plots import write_svg

logger = get_logger("cli")


class ExperimentRunner:
    """Builds one graph per config: build_space, then one node per analysis in declared order."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.space_agent = SpaceAgent()
        self.packing_agent = PackingAgent(cap=config.cap)
        self.doubling_agent = DoublingAgent()
        self.metrize_agent = MetrizeAgent()
        self.theorem_agent = TheoremAgent(cap=config.cap)

        handlers: Dict[str, Callable] = {
            "validate": self.metrize_agent.validate,
            "metrize": self.metrize_agent.metrize,
            "packing": self.packing_agent.packing,
            "profile": self.packing_agent.profile,
            "doubling": self.doubling_agent.doubling,
            "ball_table": self.doubling_agent.ball_table,
            "theorem2": self.theorem_agent.theorem2,
            "theorem3": self.theorem_agent.theorem3,
        }

        self.workflow = StateGraph(ExperimentState)
        self.workflow.add_node("build_space", self.space_agent.build_space)
        self.workflow.set_entry_point("build_space")

        previous = "build_space"
        for i, analysis in enumerate(config.analyses):
            name = f"{i}_{analysis.kind}"
            self.workflow.add_node(name, _bind(handlers[analysis.kind], i, analysis))
            self.workflow.add_edge(previous, name)
            previous = name
        self.workflow.add_edge(previous, END)

        self.graph = self.workflow.compile()

    def run(self) -> Tuple[Report, dict]:
        initial_state = {
            "config": self.config.model_dump(mode="json"),
            "space": None,
            "space_info": None,
            "results": [],
            "tables": [],
            "plots": [],
            "errors": [],
            "metadata": {},
        }
        result = self.graph.invoke(initial_state, {"recursion_limit": len(self.config.analyses) + 5})

        report = Report(
            config=self.config.model_dump(mode="json"),
            space=result.get("space_info"),
            results=result.get("results", []),
            errors=result.get("errors", []),
            provenance=Provenance(
                version=__version__,
                seed=self.config.seed,
                tolerances={
                    "relative": settings.REL_TOL,
                    "absolute": settings.ABS_TOL,
                    "symmetry": settings.SYMMETRY_TOL,
                    "trend_threshold": settings.TREND_THRESHOLD,
                },
                caps={
                    "exact": self.config.cap or settings.EXACT_CAP,
                    "grid": settings.GRID_CAP,
                    "matrix": settings.MATRIX_CAP,
                    "apsp": settings.APSP_CAP,
                },
            ),
        )
        if report.errors:
            logger.warning(f"Run finished with {len(report.errors)} error(s)")
        return report, result


def _bind(handler: Callable, index: int, spec) -> Callable[[ExperimentState], dict]:
    def node(state: ExperimentState) -> dict:
        return handler(state, index, spec)
    return node


def plot_paths(svg_path: str, names: List[str]) -> List[str]:
    """The SVG path itself for one plot, otherwise one sibling file per plot name."""
    if len(names) == 1:
        return [svg_path]
    stem, ext = os.path.splitext(svg_path)
    return [f"{stem}_{name}{ext or '.svg'}" for name in names]


def write_outputs(config: ExperimentConfig, report: Report, result: dict):
    output = config.output
    if output.format == "csv":
        if output.path:
            write_table(result.get("tables", []), output.path)
        else:
            sys.stdout.write(table_csv(result.get("tables", [])))
    elif output.path:
        write_json(report, output.path)
    else:
        print(report.model_dump_json(indent=2, by_alias=True))

    plots = result.get("plots", [])
    if output.svg and plots:
        for path, plot in zip(plot_paths(output.svg, [p["name"] for p in plots]), plots):
            write_svg(plot["svg"], path)


def run(config: ExperimentConfig) -> Report:
    report, result = ExperimentRunner(config).run()
    write_outputs(config, report, result)
    return report


def _metric(args) -> dict:
    metric = {"kind": args.metric}
    if args.weights:
        metric["weights"] = [float(w) for w in args.weights.split(",")]
    return metric


def build_config(args) -> ExperimentConfig:
    """Turn a subcommand and its flags into a validated ExperimentConfig"""
    output = {"path": args.out, "format": args.format, "svg": args.svg}

    if args.command == "run":
        with open(args.config, encoding="utf-8") as f:
            data = json.load(f)
        data.setdefault("output", {})
        data["output"].update({k: v for k, v in output.items() if v is not None and k != "format"})
        if args.format_given:
            data["output"]["format"] = args.format
        if args.cap is not None:
            data["cap"] = args.cap
        return ExperimentConfig.model_validate(data)

    data = {"output": output, "cap": args.cap}
    if args.command == "validate":
        data["space"] = {"type": "matrix_csv", "path": args.input}
        data["analyses"] = [{"kind": "validate"}]
    elif args.command == "metrize":
        data["space"] = {"type": "matrix_csv", "path": args.input}
        # --out names the chain CSV here; the report goes to --report or stdout
        data["output"]["path"] = args.report
        data["analyses"] = [{"kind": "validate"}, {"kind": "metrize", "chain_path": args.out, "q": args.q}]
    elif args.command == "packing":
        data["space"] = {"type": "matrix_csv", "path": args.input}
        data["analyses"] = [{"kind": "packing", "l": args.radii, "exact": args.exact}]
    elif args.command == "doubling":
        data["space"] = {"type": "measured_csv", "path": args.input}
        data["analyses"] = [{"kind": "doubling", "l": args.l}]
    elif args.command == "theorem2":
        data["analyses"] = [{"kind": "theorem2", "n": args.n, "j": args.j, "metric": _metric(args)}]
    elif args.command == "theorem3":
        analysis = {"kind": "theorem3", "n": args.n, "j": int(args.j), "metric": _metric(args),
                    "resolution": args.resolution}
        if args.tol is not None:
            analysis["tol"] = args.tol
        data["analyses"] = [analysis]
    elif args.command == "cantor":
        data["space"] = {"type": "cantor", "level": args.level}
        data["analyses"] = [
            {"kind": "doubling", "l": args.l},
            {"kind": "ball_table"},
            {"kind": "packing", "l": args.packing_l},
        ]
    elif args.command == "logline":
        half = math.expm1(args.span)
        data["space"] = {"type": "log_line", "points": {"range": [-half, half], "count": args.count}}
        data["analyses"] = [{"kind": "profile", "radii": [float(r) for r in args.radii.split(",")]}]
    return ExperimentConfig.model_validate(data)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="Report path (stdout when omitted)")
    common.add_argument("--format", choices=["json", "csv"], default="json", help="Report format")
    common.add_argument("--svg", help="SVG plot path")
    common.add_argument("--cap", type=int, help="Exact-search cap for this run")
    common.add_argument("--tol", type=float, help="Witness residual tolerance (theorem3)")

    parser = argparse.ArgumentParser(prog="doubleprobe", description="Doubling, packing and metrization probes on finite samples")
    parser.add_argument("--version", action="version", version=f"doubleprobe {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="Quasimetric axioms and constant of a matrix CSV")
    p.add_argument("--input", required=True)

    p = sub.add_parser("metrize", parents=[common], help="Chain metrization and sandwich check")
    p.add_argument("--input", required=True)
    p.add_argument("--q", type=float, help="Chain exponent in (0, 1]; exponent_q(K) when omitted")
    p.add_argument("--report", help="Report path (stdout when omitted)")

    p = sub.add_parser("packing", parents=[common], help="Separated-set counts on dyadic radii")
    p.add_argument("--input", required=True)
    p.add_argument("--radii", "--l", dest="radii", default="dyadic:1..8", help="Radii 2^-l as an l range, e.g. dyadic:2..8")
    p.add_argument("--exact", action="store_true", help="Exact maximum within the cap")

    p = sub.add_parser("doubling", parents=[common], help="Doubling verdict of a measured CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--l", default="1..8")

    for name, j_default, j_help in (("theorem2", "1..4", "j range"), ("theorem3", "2", "refinement level")):
        p = sub.add_parser(name, parents=[common], help=f"{name} construction on the torus")
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--j", default=j_default, help=j_help)
        p.add_argument("--metric", choices=["weighted_sum", "sup", "bendikov"],
                       default="weighted_sum" if name == "theorem2" else "sup")
        p.add_argument("--weights", help="Comma-separated coordinate weights")
        if name == "theorem3":
            p.add_argument("--resolution", type=int, default=None)

    p = sub.add_parser("run", parents=[common], help="Run an experiment config (JSON)")
    p.add_argument("--config", required=True)

    p = sub.add_parser("cantor", parents=[common], help="Cantor preset: doubling sweep, ball table, packing fit")
    p.add_argument("--level", type=int, default=10)
    p.add_argument("--l", default="1..8")
    p.add_argument("--packing-l", default="2..8")

    p = sub.add_parser("logline", parents=[common], help="Log-line preset: geometric doubling profile")
    p.add_argument("--span", type=float, default=8.0)
    p.add_argument("--count", type=int, default=2049)
    p.add_argument("--radii", default="1,2,4")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    args = build_parser().parse_args(argv)
    args.format_given = any(a == "--format" or a.startswith("--format=") for a in argv)

    try:
        config = build_config(args)
    except (ValidationError, ValueError, OSError) as e:
        logger.error(f"Invalid configuration: {e}")
        print(f"\n Error: invalid configuration\n{e}", file=sys.stderr)
        return 2

    report = run(config)
    if report.errors:
        for error in report.errors:
            print(f"\n Error: {error['error']}", file=sys.stderr)
            print(f" Stage: {error.get('stage', 'unknown')}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
