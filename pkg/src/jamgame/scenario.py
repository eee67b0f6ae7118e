"""Scenario definition, validation, and JSON serialization.

A scenario file is a JSON object carrying every configurable quantity of one
game: topology, initial state, consensus weights, utility weights, energy
parameters, horizons, periods, cost model, run length, and tolerances. Loading
materializes all defaults, so a serialized scenario is fully self-describing
and round-trips to an identical object. Exact rationals that are not integers
are written as "p/q" strings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .dynamics import State, Weights, as_fraction, make_state
from .energy import EDGE_ATTACK, NODE_ATTACK, WASTE_CHARGED, WASTE_FREE, CostModel, EnergyParams
from .game import UtilityWeights
from .network import Graph, is_connected

FORMAT_VERSION = 1

DEFAULT_K = 500
DEFAULT_CONVERGENCE_EPS = Fraction(1, 10**9)
DEFAULT_CONVERGENCE_WINDOW = 10
DEFAULT_CLUSTER_TOL = Fraction(1, 10**6)
DEFAULT_WORK_BOUND_GAME = 30
DEFAULT_WORK_BOUND_THETA = 16


class ScenarioError(ValueError):
    """Validation failure with the offending field spelled out."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class Scenario:
    graph: Graph
    initial_state: State
    weights: Weights
    util: UtilityWeights
    attacker_energy: EnergyParams
    defender_energy: EnergyParams
    h_attacker: int
    h_defender: int
    T_attacker: int
    T_defender: int
    cost_model: CostModel = CostModel()
    K: int = DEFAULT_K
    convergence_eps: Fraction = DEFAULT_CONVERGENCE_EPS
    convergence_window: int = DEFAULT_CONVERGENCE_WINDOW
    cluster_tol: Fraction = DEFAULT_CLUSTER_TOL
    work_bound_game: int = DEFAULT_WORK_BOUND_GAME
    work_bound_theta: int = DEFAULT_WORK_BOUND_THETA
    name: str = ""
    description: str = ""

    def __post_init__(self) -> None:
        if not is_connected(self.graph):
            raise ScenarioError("graph", "base graph must be connected")
        if len(self.initial_state) != self.graph.n:
            raise ScenarioError("initial_state", f"expected {self.graph.n} entries, got {len(self.initial_state)}")
        for who, h, T in (
            ("attacker", self.h_attacker, self.T_attacker),
            ("defender", self.h_defender, self.T_defender),
        ):
            if not 1 <= T <= h:
                raise ScenarioError(f"periods.{who}", f"need 1 <= period <= horizon, got T={T}, h={h}")
        if self.K < 1:
            raise ScenarioError("K", "run length must be at least 1")
        if self.convergence_eps <= 0:
            raise ScenarioError("tolerances.convergence_eps", "must be positive")
        if self.convergence_window < 1:
            raise ScenarioError("tolerances.convergence_window", "must be at least 1")
        if self.cluster_tol <= 0:
            raise ScenarioError("tolerances.cluster_tol", "must be positive")
        if self.work_bound_game < 1 or self.work_bound_theta < 1:
            raise ScenarioError("work_bounds", "bounds must be at least 1")

    @property
    def game_work(self) -> int:
        """Size measure gating the exponential solver: |E| * max horizon."""
        return len(self.graph.edges) * max(self.h_attacker, self.h_defender)


def _rational(value: Fraction):
    return int(value) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def _edge_key(edge) -> str:
    return f"{edge[0]}-{edge[1]}"


def _parse_edge_key(key: str, field: str):
    try:
        a, b = key.split("-")
        return (int(a), int(b))
    except ValueError as exc:
        raise ScenarioError(field, f"bad edge key {key!r}, expected 'i-j'") from exc


def _need(data: dict, key: str) -> object:
    if key not in data:
        raise ScenarioError(key, "missing required field")
    return data[key]


def _fraction_field(raw, field: str) -> Fraction:
    try:
        return as_fraction(raw)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ScenarioError(field, str(exc)) from exc


_TOP_KEYS = {
    "format_version",
    "name",
    "description",
    "graph",
    "initial_state",
    "weights",
    "utility",
    "attacker_energy",
    "defender_energy",
    "horizons",
    "periods",
    "cost_model",
    "K",
    "tolerances",
    "work_bounds",
}


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("<root>", "scenario must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ScenarioError(sorted(unknown)[0], "unknown field")
    version = data.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ScenarioError("format_version", f"unsupported version {version!r}")

    graph_raw = _need(data, "graph")
    try:
        graph = Graph.from_edges(int(graph_raw["n"]), [tuple(e) for e in graph_raw["edges"]])
    except ScenarioError:
        raise
    except Exception as exc:
        raise ScenarioError("graph", str(exc)) from exc

    try:
        state = make_state(_need(data, "initial_state"))
    except ScenarioError:
        raise
    except Exception as exc:
        raise ScenarioError("initial_state", str(exc)) from exc

    weights_raw = data.get("weights", {"kind": "uniform"})
    kind = weights_raw.get("kind", "uniform")
    try:
        if kind == "uniform":
            value = weights_raw.get("value")
            weights = Weights.uniform(graph, as_fraction(value) if value is not None else None)
        elif kind == "matrix":
            by_edge = {
                _parse_edge_key(k, "weights.by_edge"): as_fraction(v)
                for k, v in weights_raw["by_edge"].items()
            }
            weights = Weights(graph.n, by_edge)
        else:
            raise ValueError(f"unknown weights kind {kind!r}")
    except ScenarioError:
        raise
    except Exception as exc:
        raise ScenarioError("weights", str(exc)) from exc

    util_raw = data.get("utility", {})
    try:
        util = UtilityWeights(
            a=as_fraction(util_raw.get("a", 1)), b=as_fraction(util_raw.get("b", 0))
        )
    except Exception as exc:
        raise ScenarioError("utility", str(exc)) from exc

    att_raw = _need(data, "attacker_energy")
    try:
        attacker = EnergyParams.attacker(
            kappa=att_raw["kappa"],
            rho=att_raw["rho"],
            beta_normal=att_raw["beta_normal"],
            beta_strong=att_raw["beta_strong"],
        )
    except Exception as exc:
        raise ScenarioError("attacker_energy", str(exc)) from exc

    def_raw = _need(data, "defender_energy")
    try:
        defender = EnergyParams.defender(
            kappa=def_raw["kappa"], rho=def_raw["rho"], beta_recover=def_raw["beta_recover"]
        )
    except Exception as exc:
        raise ScenarioError("defender_energy", str(exc)) from exc

    horizons = _need(data, "horizons")
    periods = _need(data, "periods")
    try:
        h_att, h_def = int(horizons["attacker"]), int(horizons["defender"])
        T_att, T_def = int(periods["attacker"]), int(periods["defender"])
    except Exception as exc:
        raise ScenarioError("horizons", str(exc)) from exc

    cm_raw = data.get("cost_model", {})
    mode = cm_raw.get("mode", EDGE_ATTACK)
    waste = cm_raw.get("waste", WASTE_CHARGED)
    if mode not in (EDGE_ATTACK, NODE_ATTACK):
        raise ScenarioError("cost_model.mode", f"expected 'edge' or 'node', got {mode!r}")
    if waste not in (WASTE_CHARGED, WASTE_FREE):
        raise ScenarioError("cost_model.waste", f"expected 'charged' or 'free', got {waste!r}")

    tol_raw = data.get("tolerances", {})
    bounds_raw = data.get("work_bounds", {})

    return Scenario(
        graph=graph,
        initial_state=state,
        weights=weights,
        util=util,
        attacker_energy=attacker,
        defender_energy=defender,
        h_attacker=h_att,
        h_defender=h_def,
        T_attacker=T_att,
        T_defender=T_def,
        cost_model=CostModel(mode=mode, waste=waste),
        K=int(data.get("K", DEFAULT_K)),
        convergence_eps=_fraction_field(
            tol_raw.get("convergence_eps", DEFAULT_CONVERGENCE_EPS), "tolerances.convergence_eps"
        ),
        convergence_window=int(tol_raw.get("convergence_window", DEFAULT_CONVERGENCE_WINDOW)),
        cluster_tol=_fraction_field(tol_raw.get("cluster_tol", DEFAULT_CLUSTER_TOL), "tolerances.cluster_tol"),
        work_bound_game=int(bounds_raw.get("game", DEFAULT_WORK_BOUND_GAME)),
        work_bound_theta=int(bounds_raw.get("theta", DEFAULT_WORK_BOUND_THETA)),
        name=str(data.get("name", "")),
        description=str(data.get("description", "")),
    )


def scenario_to_dict(s: Scenario) -> dict:
    values = set(s.weights.by_edge.values())
    if len(values) == 1:
        weights = {"kind": "uniform", "value": _rational(next(iter(values)))}
    else:
        weights = {
            "kind": "matrix",
            "by_edge": {_edge_key(e): _rational(v) for e, v in sorted(s.weights.by_edge.items())},
        }
    return {
        "format_version": FORMAT_VERSION,
        "name": s.name,
        "description": s.description,
        "graph": {"n": s.graph.n, "edges": [list(e) for e in s.graph.sorted_edges]},
        "initial_state": [_rational(x) for x in s.initial_state],
        "weights": weights,
        "utility": {"a": _rational(s.util.a), "b": _rational(s.util.b)},
        "attacker_energy": {
            "kappa": _rational(s.attacker_energy.kappa),
            "rho": _rational(s.attacker_energy.rho),
            "beta_normal": _rational(s.attacker_energy.beta_normal),
            "beta_strong": _rational(s.attacker_energy.beta_strong),
        },
        "defender_energy": {
            "kappa": _rational(s.defender_energy.kappa),
            "rho": _rational(s.defender_energy.rho),
            "beta_recover": _rational(s.defender_energy.beta_recover),
        },
        "horizons": {"attacker": s.h_attacker, "defender": s.h_defender},
        "periods": {"attacker": s.T_attacker, "defender": s.T_defender},
        "cost_model": {"mode": s.cost_model.mode, "waste": s.cost_model.waste},
        "K": s.K,
        "tolerances": {
            "convergence_eps": _rational(s.convergence_eps),
            "convergence_window": s.convergence_window,
            "cluster_tol": _rational(s.cluster_tol),
        },
        "work_bounds": {"game": s.work_bound_game, "theta": s.work_bound_theta},
    }


def dumps_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2) + "\n"


def loads_scenario(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("<file>", f"not valid JSON: {exc}") from exc
    return scenario_from_dict(data)


def load_scenario(path) -> Scenario:
    return loads_scenario(Path(path).read_text())


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(dumps_scenario(s))


def bundled_names() -> list[str]:
    root = resources.files(__package__) / "scenarios"
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def bundled_scenario(name: str) -> Scenario:
    ref = resources.files(__package__) / "scenarios" / f"{name}.json"
    if not ref.is_file():
        raise ScenarioError("name", f"no bundled scenario {name!r}; available: {', '.join(bundled_names())}")
    return loads_scenario(ref.read_text())
