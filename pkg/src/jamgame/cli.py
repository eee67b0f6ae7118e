"""Command line entry point.

Subcommands: `run` simulates a scenario and writes the trace plus plot-ready
CSVs, `analyze` prints the static condition report and cluster bounds, `sweep`
repeats a run over a parameter grid, `validate` checks a scenario file. The
scenario argument is a file path or the name of a bundled example.

Exit codes: 0 success, 2 validation failure, 3 work bound exceeded.
"""

from __future__ import annotations

import argparse
import dataclasses
import csv
import itertools
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .analysis import (
    WorkBoundExceeded,
    check_conditions,
    cluster_upper_bound,
    consensus_verdict,
    theta_vector,
)
from .dynamics import as_fraction, make_state
from .energy import NODE_ATTACK, budget_at
from .game import ATTACKER, AttackAction, DefenseAction, Plan
from .network import Edge
from .rolling import Trace, TraceStep, run
from .scenario import (
    Scenario,
    ScenarioError,
    bundled_names,
    bundled_scenario,
    load_scenario,
    scenario_to_dict,
)

TRACE_VERSION = 1
EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_WORK_BOUND = 3

GRID_PARAMS = ("h_attacker", "h_defender", "T_attacker", "T_defender", "rho_attacker", "rho_defender")


# --- run summaries -------------------------------------------------------------


@dataclass(frozen=True)
class DecisionRecord:
    owner: str
    decision_index: int
    start_time: int
    utility: Fraction


@dataclass(frozen=True)
class RunSummary:
    name: str
    verdict: str
    clusters: tuple[tuple[int, ...], ...]
    cluster_count: int
    cluster_bound: int
    within_bound: bool | None
    union_connected: bool | None
    steps: int
    converged_at: int | None
    attacker_spent: Fraction
    attacker_wasted: Fraction
    defender_spent: Fraction
    defender_wasted: Fraction
    decisions: tuple[DecisionRecord, ...]


def summarize(trace: Trace) -> RunSummary:
    """Condense a trace into the report the CLI prints and serializes."""
    s = trace.scenario
    verdict = consensus_verdict(trace)
    bound = cluster_upper_bound(
        s.graph,
        s.attacker_energy,
        (s.h_attacker, s.h_defender),
        (s.T_attacker, s.T_defender),
        s.util,
        s.cost_model,
        work_bound=s.work_bound_theta,
    )
    count = verdict.clusters.group_count
    last = trace.steps[-1]
    return RunSummary(
        name=s.name,
        verdict=verdict.verdict,
        clusters=tuple(tuple(sorted(c)) for c in verdict.clusters.groups),
        cluster_count=count,
        cluster_bound=bound,
        within_bound=None if verdict.verdict == "undecided" else count <= bound,
        union_connected=verdict.union_connected,
        steps=len(trace.steps),
        converged_at=trace.converged_at,
        attacker_spent=last.attacker_spent,
        attacker_wasted=last.attacker_wasted,
        defender_spent=last.defender_spent,
        defender_wasted=last.defender_wasted,
        decisions=tuple(
            DecisionRecord(p.owner, p.decision_index, p.start_time, p.utility) for p in trace.plans
        ),
    )


def _jsonable(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if dataclasses.is_dataclass(value):
        return {f.name: _jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    return value


def summary_text(summary: RunSummary) -> str:
    groups = " ".join("{" + ",".join(map(str, c)) + "}" for c in summary.clusters)
    within = {True: "yes", False: "NO", None: "n/a"}[summary.within_bound]
    converged = "not within step limit" if summary.converged_at is None else f"at k={summary.converged_at}"
    lines = [
        f"scenario: {summary.name}",
        f"verdict: {summary.verdict}",
        f"clusters: {groups}",
        f"cluster count: {summary.cluster_count} (bound {summary.cluster_bound}, within bound: {within})",
        f"steps: {summary.steps} (settled {converged})",
        f"attacker spent: {summary.attacker_spent} (wasted {summary.attacker_wasted})",
        f"defender spent: {summary.defender_spent} (wasted {summary.defender_wasted})",
        f"decisions: {len(summary.decisions)} (per-decision utilities in summary.json)",
    ]
    return "\n".join(lines)


# --- exact-text serialization ----------------------------------------------------


def _edges_str(edges) -> str:
    return ";".join(f"{a}-{b}" for a, b in sorted(edges))


def _edges_parse(text: str) -> frozenset[Edge]:
    if not text:
        return frozenset()
    out = set()
    for item in text.split(";"):
        a, b = item.split("-")
        out.add((int(a), int(b)))
    return frozenset(out)


def _nodes_str(nodes) -> str:
    return ";".join(str(v) for v in sorted(nodes))


def _nodes_parse(text: str) -> frozenset[int]:
    return frozenset(int(v) for v in text.split(";")) if text else frozenset()


def _attack_json(a: AttackAction) -> dict:
    return {
        "strong": _edges_str(a.strong),
        "normal": _edges_str(a.normal),
        "strong_nodes": _nodes_str(a.strong_nodes),
        "normal_nodes": _nodes_str(a.normal_nodes),
    }


def _attack_from(d: dict) -> AttackAction:
    return AttackAction(
        _edges_parse(d["strong"]),
        _edges_parse(d["normal"]),
        strong_nodes=_nodes_parse(d["strong_nodes"]),
        normal_nodes=_nodes_parse(d["normal_nodes"]),
    )


TRACE_COLUMNS = [
    "k", "strong", "normal", "strong_nodes", "normal_nodes",
    "recover_planned", "recover_effective", "resolved",
    "attacker_spent", "attacker_wasted", "defender_spent", "defender_wasted", "payoff",
]


def write_trace_csv(trace: Trace, path: Path) -> None:
    """Exact trace table; states and energies are fraction strings."""
    n = trace.scenario.graph.n
    columns = TRACE_COLUMNS + [f"x{i}" for i in range(1, n + 1)]
    with open(path, "w", newline="") as fh:
        fh.write(f"# trace_version {TRACE_VERSION}\n")
        fh.write(f"# converged_at {trace.converged_at if trace.converged_at is not None else 'none'}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for st in trace.steps:
            writer.writerow(
                [
                    st.k,
                    _edges_str(st.attack.strong),
                    _edges_str(st.attack.normal),
                    _nodes_str(st.attack.strong_nodes),
                    _nodes_str(st.attack.normal_nodes),
                    _edges_str(st.defense_planned.recover),
                    _edges_str(st.defense_effective),
                    _edges_str(st.resolved_edges),
                    st.attacker_spent,
                    st.attacker_wasted,
                    st.defender_spent,
                    st.defender_wasted,
                    st.payoff,
                ]
                + [str(x) for x in st.state]
            )


def write_plans_csv(trace: Trace, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["owner", "decision_index", "start_time", "utility", "steps"])
        for p in trace.plans:
            if p.owner == ATTACKER:
                steps = [_attack_json(a) for a in p.steps]
            else:
                steps = [{"recover": _edges_str(d.recover)} for d in p.steps]
            writer.writerow([p.owner, p.decision_index, p.start_time, p.utility, json.dumps(steps)])


def read_trace_csv(path: Path, scenario: Scenario) -> tuple[tuple[TraceStep, ...], int | None]:
    with open(path, newline="") as fh:
        version_line = fh.readline().strip()
        if version_line != f"# trace_version {TRACE_VERSION}":
            raise ValueError(f"unsupported trace header: {version_line!r}")
        converged_text = fh.readline().strip().removeprefix("# converged_at ")
        converged_at = None if converged_text == "none" else int(converged_text)
        steps = []
        for row in csv.DictReader(fh):
            attack = _attack_from(
                {
                    "strong": row["strong"],
                    "normal": row["normal"],
                    "strong_nodes": row["strong_nodes"],
                    "normal_nodes": row["normal_nodes"],
                }
            )
            steps.append(
                TraceStep(
                    k=int(row["k"]),
                    attack=attack,
                    defense_planned=DefenseAction(_edges_parse(row["recover_planned"])),
                    defense_effective=_edges_parse(row["recover_effective"]),
                    resolved_edges=_edges_parse(row["resolved"]),
                    state=make_state([row[f"x{i}"] for i in range(1, scenario.graph.n + 1)]),
                    attacker_spent=Fraction(row["attacker_spent"]),
                    attacker_wasted=Fraction(row["attacker_wasted"]),
                    defender_spent=Fraction(row["defender_spent"]),
                    defender_wasted=Fraction(row["defender_wasted"]),
                    payoff=Fraction(row["payoff"]),
                )
            )
    return tuple(steps), converged_at


def read_plans_csv(path: Path) -> tuple[Plan, ...]:
    plans = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            raw = json.loads(row["steps"])
            if row["owner"] == ATTACKER:
                steps = tuple(_attack_from(d) for d in raw)
            else:
                steps = tuple(DefenseAction(_edges_parse(d["recover"])) for d in raw)
            plans.append(
                Plan(
                    owner=row["owner"],
                    decision_index=int(row["decision_index"]),
                    start_time=int(row["start_time"]),
                    steps=steps,
                    utility=Fraction(row["utility"]),
                )
            )
    return tuple(plans)


def read_run(outdir: Path, scenario: Scenario) -> Trace:
    """Rebuild a trace from the files cmd_run wrote."""
    steps, converged_at = read_trace_csv(outdir / "trace.csv", scenario)
    plans = read_plans_csv(outdir / "plans.csv")
    return Trace(scenario=scenario, steps=steps, plans=plans, converged_at=converged_at)


def write_plot_csvs(trace: Trace, outdir: Path) -> None:
    """Float tables for plotting: states over time and energy ledgers over time."""
    s = trace.scenario
    n = s.graph.n
    with open(outdir / "plot_states.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k"] + [f"x{i}" for i in range(1, n + 1)])
        for k, state in enumerate(trace.states()):
            writer.writerow([k] + [float(x) for x in state])
    with open(outdir / "plot_energy.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["k", "attacker_budget", "attacker_spent", "attacker_wasted",
             "defender_budget", "defender_spent", "defender_wasted"]
        )
        for st in trace.steps:
            writer.writerow(
                [
                    st.k,
                    float(budget_at(s.attacker_energy, st.k)),
                    float(st.attacker_spent),
                    float(st.attacker_wasted),
                    float(budget_at(s.defender_energy, st.k)),
                    float(st.defender_spent),
                    float(st.defender_wasted),
                ]
            )


# --- subcommands -----------------------------------------------------------------


def _load(arg: str) -> Scenario:
    path = Path(arg)
    if path.exists():
        return load_scenario(path)
    if arg in bundled_names():
        return bundled_scenario(arg)
    raise ScenarioError("scenario", f"{arg!r} is neither a file nor a bundled name {bundled_names()}")


def _game_gate(scenario: Scenario, override: int | None) -> None:
    bound = scenario.work_bound_game if override is None else override
    if scenario.game_work > bound:
        raise WorkBoundExceeded(
            f"instance work |E|*max(h) = {scenario.game_work} exceeds bound {bound}"
        )


def cmd_run(args) -> int:
    scenario = _load(args.scenario)
    _game_gate(scenario, args.work_bound)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    trace = run(scenario)
    summary = summarize(trace)
    (outdir / "scenario.json").write_text(json.dumps(scenario_to_dict(scenario), indent=2) + "\n")
    write_trace_csv(trace, outdir / "trace.csv")
    write_plans_csv(trace, outdir / "plans.csv")
    write_plot_csvs(trace, outdir)
    (outdir / "summary.json").write_text(json.dumps(_jsonable(summary), indent=2) + "\n")
    if args.json:
        print(json.dumps(_jsonable(summary), indent=2))
    else:
        print(summary_text(summary))
        print(f"artifacts: {outdir}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    scenario = _load(args.scenario)
    mode = scenario.cost_model.mode
    bound = scenario.work_bound_theta if args.work_bound is None else args.work_bound
    report = check_conditions(
        scenario.graph,
        scenario.attacker_energy,
        scenario.defender_energy,
        (scenario.h_attacker, scenario.h_defender),
        (scenario.T_attacker, scenario.T_defender),
        scenario.util,
        scenario.cost_model,
    )
    theta = theta_vector(scenario.graph, mode, work_bound=bound)
    cluster_bound = cluster_upper_bound(
        scenario.graph,
        scenario.attacker_energy,
        (scenario.h_attacker, scenario.h_defender),
        (scenario.T_attacker, scenario.T_defender),
        scenario.util,
        scenario.cost_model,
        work_bound=bound,
    )
    if args.json:
        print(
            json.dumps(
                {
                    "scenario": scenario.name,
                    "conditions": _jsonable(report),
                    "theta": {"mode": theta.mode, "values": list(theta.values)},
                    "cluster_bound": cluster_bound,
                },
                indent=2,
            )
        )
        return EXIT_OK
    kind = "node" if mode == NODE_ATTACK else "edge"
    print(f"scenario: {scenario.name}")
    print(f"edge connectivity: {report.edge_conn}")
    print(f"normal-rate ratio rho/beta: {report.ratio_normal}")
    print(f"strong-rate ratio rho/beta_strong: {report.ratio_strong}")
    print(f"necessary (normal price): {report.necessary_normal}")
    print(f"necessary (strong price): {report.necessary_strong}")
    print(f"tighter condition applicable: {report.tighter_applicable} (case a: {report.case_a}, case b: {report.case_b})")
    print(f"sufficient for full split: {report.sufficient_full_split}")
    print(f"node-attack thresholds: normal {report.necessary_normal_node}, strong {report.necessary_strong_node}")
    print(f"theta ({kind} removals 1..{len(theta.values)}): {list(theta.values)}")
    print(f"cluster upper bound: {cluster_bound}")
    return EXIT_OK


SWEEP_COLUMNS = [
    "name", "status", "error", "verdict", "cluster_count", "cluster_bound",
    "steps", "converged_at", "attacker_spent", "attacker_wasted",
    "defender_spent", "defender_wasted",
]


def _apply_point(scenario: Scenario, point: dict) -> Scenario:
    updates = {}
    for key, value in point.items():
        if key == "rho_attacker":
            updates["attacker_energy"] = dataclasses.replace(scenario.attacker_energy, rho=value)
        elif key == "rho_defender":
            updates["defender_energy"] = dataclasses.replace(scenario.defender_energy, rho=value)
        else:
            updates[key] = value
    label = ",".join(f"{k}={v}" for k, v in point.items())
    name = f"{scenario.name}[{label}]" if label else scenario.name
    return dataclasses.replace(scenario, name=name, **updates)


def _parse_grid(raw_axes: list[str]) -> list[dict]:
    axes = []
    for raw_axis in raw_axes:
        name, _, raw = raw_axis.partition("=")
        if name not in GRID_PARAMS:
            raise ScenarioError("grid", f"unknown grid parameter {name!r}; choose from {GRID_PARAMS}")
        if not raw:
            raise ScenarioError("grid", f"grid axis {raw_axis!r} needs comma-separated values")
        if name.startswith("rho_"):
            values = [as_fraction(v) for v in raw.split(",")]
        else:
            values = [int(v) for v in raw.split(",")]
        axes.append([(name, v) for v in values])
    return [dict(combo) for combo in itertools.product(*axes)] if axes else [{}]


def cmd_sweep(args) -> int:
    base = _load(args.scenario)
    points = _parse_grid(args.grid)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    for point in points:
        label = ",".join(f"{k}={v}" for k, v in point.items())
        name = f"{base.name}[{label}]" if label else base.name
        row = {c: "" for c in SWEEP_COLUMNS}
        row["name"] = name
        try:
            scenario = _apply_point(base, point)
            _game_gate(scenario, args.work_bound)
            summary = summarize(run(scenario))
        except (ScenarioError, ValueError) as err:
            row["status"] = "validation_error"
            row["error"] = str(err)
        except WorkBoundExceeded as err:
            row["status"] = "work_bound_exceeded"
            row["error"] = str(err)
        else:
            row.update(
                status="ok",
                verdict=summary.verdict,
                cluster_count=summary.cluster_count,
                cluster_bound=summary.cluster_bound,
                steps=summary.steps,
                converged_at="" if summary.converged_at is None else summary.converged_at,
                attacker_spent=str(summary.attacker_spent),
                attacker_wasted=str(summary.attacker_wasted),
                defender_spent=str(summary.defender_spent),
                defender_wasted=str(summary.defender_wasted),
            )
        rows.append(row)

    table = outdir / "sweep.csv"
    with open(table, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    done = sum(1 for r in rows if r["status"] == "ok")
    print(f"swept {len(rows)} points ({done} ok) -> {table}")
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario = _load(args.scenario)
    if args.json:
        print(json.dumps(scenario_to_dict(scenario), indent=2))
    else:
        print(f"ok: {scenario.name} (n={scenario.graph.n}, |E|={len(scenario.graph.edges)}, K={scenario.K})")
    return EXIT_OK


# --- argument parsing ---------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("scenario", help="scenario file path or bundled name")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument("--seedless", action="store_true", help="reserved; runs are always deterministic")
    parser.add_argument("--work-bound", type=int, default=None, help="override the configured work bound")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jamgame", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario and write trace artifacts")
    _add_common(p_run)
    p_run.add_argument("--output", default="jamgame_out", help="artifact directory")
    p_run.set_defaults(handler=cmd_run)

    p_analyze = sub.add_parser("analyze", help="print conditions, theta, and cluster bound")
    _add_common(p_analyze)
    p_analyze.set_defaults(handler=cmd_analyze)

    p_sweep = sub.add_parser("sweep", help="run a grid of scenario variations")
    _add_common(p_sweep)
    p_sweep.add_argument("--output", default="jamgame_out", help="artifact directory")
    p_sweep.add_argument(
        "--grid",
        action="append",
        default=[],
        metavar="PARAM=V1,V2",
        help=f"sweep axis; repeatable; parameters: {', '.join(GRID_PARAMS)}",
    )
    p_sweep.set_defaults(handler=cmd_sweep)

    p_validate = sub.add_parser("validate", help="check a scenario file")
    _add_common(p_validate)
    p_validate.set_defaults(handler=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ScenarioError as err:
        print(f"invalid scenario: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except WorkBoundExceeded as err:
        print(f"work bound exceeded: {err}", file=sys.stderr)
        return EXIT_WORK_BOUND


if __name__ == "__main__":
    sys.exit(main())
