"""Static feasibility conditions, clustering bounds, and brute-force oracles.

The condition report and the cluster bound are pure functions of the scenario
configuration; nothing here runs the game. The brute-force solver enumerates
whole plans and exists to cross-check the backward-induction solver: the two
share only the opponent information structure and the tie-break rule, never
the search.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .dynamics import State, consensus_step, detect_clusters, state_difference
from .energy import CostModel, EnergyParams, NODE_ATTACK, attack_cost, budget_at, defense_cost
from .game import (
    ATTACKER,
    DEFENDER,
    FIXED,
    AttackAction,
    DefenseAction,
    Plan,
    SolveContext,
    opponent,
    opponent_layout,
    tie_break,
)
from .network import (
    Edge,
    Graph,
    Partition,
    agent_group_index,
    apply_actions,
    edge_connectivity,
    group_count,
    is_connected,
)
from .rolling import Trace


class WorkBoundExceeded(RuntimeError):
    """An exact enumeration would exceed its configured work bound."""


# --- splitting power of attack sets ------------------------------------------


@dataclass(frozen=True)
class ThetaVector:
    """Maximal group counts by attack size; entry i-1 is for exactly i removals."""

    mode: str
    values: tuple[int, ...]

    def at(self, i: int) -> int:
        """Theta_i, 1-indexed like the removal count."""
        return self.values[i - 1]


def theta_vector(g: Graph, mode: str = "edge", work_bound: int = 16) -> ThetaVector:
    """Exact maximal group counts over every attack-set size.

    Edge mode enumerates all edge subsets; node mode removes the attacked
    vertices with their incident edges and counts groups among the remainder,
    so the last entry is 0.
    """
    if mode == NODE_ATTACK:
        if g.n > work_bound:
            raise WorkBoundExceeded(f"node enumeration needs 2^{g.n} subsets, bound is 2^{work_bound}")
        values = []
        for i in range(1, g.n + 1):
            best = 0
            for removed in itertools.combinations(range(1, g.n + 1), i):
                stripped = g.without_edges(g.incident_edges(frozenset(removed)))
                best = max(best, group_count(stripped) - i)
            values.append(best)
        return ThetaVector(mode=mode, values=tuple(values))

    m = len(g.edges)
    if m > work_bound:
        raise WorkBoundExceeded(f"edge enumeration needs 2^{m} subsets, bound is 2^{work_bound}")
    edges = g.sorted_edges
    values = []
    for i in range(1, m + 1):
        best = 1
        for removed in itertools.combinations(edges, i):
            best = max(best, group_count(g.without_edges(frozenset(removed))))
        values.append(best)
    return ThetaVector(mode=mode, values=tuple(values))


# --- configuration-level conditions -------------------------------------------


@dataclass(frozen=True)
class ConditionReport:
    """Consensus-prevention inequalities evaluated for one configuration."""

    edge_conn: int
    ratio_normal: Fraction
    ratio_strong: Fraction
    necessary_normal: bool
    necessary_strong: bool
    case_a: bool
    case_b: bool
    tighter_applicable: bool
    sufficient_full_split: bool
    necessary_normal_node: bool
    necessary_strong_node: bool


def _cases(util, horizons, periods) -> tuple[bool, bool]:
    h_att, h_def = horizons
    T_att, T_def = periods
    disagreement_only = util.b == 0
    case_a = disagreement_only and h_def >= h_att and math.lcm(T_att, T_def) == T_att
    case_b = disagreement_only and T_def == 1
    return case_a, case_b


def check_conditions(
    g: Graph,
    attacker: EnergyParams,
    defender: EnergyParams,
    horizons: tuple[int, int],
    periods: tuple[int, int],
    util,
    cost_model: CostModel = CostModel(),
) -> ConditionReport:
    """Evaluate the consensus-prevention inequalities and their applicability.

    The rate-per-price ratios are compared against edge connectivity for edge
    attacks and against 1 for node attacks, where isolating a single agent
    already prevents consensus. The tighter (strong-price) necessary condition
    applies only when the objective ignores grouping and the defender either
    re-decides every step or spans the attacker's window on a nested cadence.
    """
    lam = edge_connectivity(g)
    r_normal = attacker.rho / attacker.beta_normal
    r_strong = attacker.rho / attacker.beta_strong
    case_a, case_b = _cases(util, horizons, periods)
    return ConditionReport(
        edge_conn=lam,
        ratio_normal=r_normal,
        ratio_strong=r_strong,
        necessary_normal=r_normal >= lam,
        necessary_strong=r_strong >= lam,
        case_a=case_a,
        case_b=case_b,
        tighter_applicable=case_a or case_b,
        sufficient_full_split=r_strong >= len(g.edges),
        necessary_normal_node=r_normal >= 1,
        necessary_strong_node=r_strong >= 1,
    )


def cluster_upper_bound(
    g: Graph,
    attacker: EnergyParams,
    horizons: tuple[int, int],
    periods: tuple[int, int],
    util,
    cost_model: CostModel = CostModel(),
    work_bound: int = 16,
) -> int:
    """Largest cluster count the attacker's energy admits at infinite time.

    A strong-price ratio covering every edge (or node) makes a full split of n
    clusters reachable outright. Otherwise the split is limited by the best
    attack of the size the budget sustains: sized by the strong price when the
    tighter condition applies, by the normal price when recovery can be outrun.
    An attacker that cannot sustain even one attack leaves a single cluster.
    """
    items = g.n if cost_model.mode == NODE_ATTACK else len(g.edges)
    r_strong = attacker.rho / attacker.beta_strong
    if r_strong >= items:
        return g.n
    case_a, case_b = _cases(util, horizons, periods)
    if case_a or case_b:
        index = math.floor(r_strong)
    else:
        index = min(items, math.floor(attacker.rho / attacker.beta_normal))
    if index < 1:
        return 1
    return theta_vector(g, cost_model.mode, work_bound).at(index)


# --- trace verdict -------------------------------------------------------------


@dataclass(frozen=True)
class ConsensusVerdict:
    """Clustering outcome of a finished trace.

    verdict is "undecided" when the run hit its step limit before the state
    settled. union_connected reports whether every full window of resolved
    graphs stays jointly connected (None when the trace is shorter than one
    window); whenever it is True, a settled run must have verdict "consensus".
    """

    verdict: str
    clusters: Partition
    union_connected: bool | None


def consensus_verdict(trace: Trace, tol: Fraction | None = None, window: int | None = None) -> ConsensusVerdict:
    s = trace.scenario
    tol = s.cluster_tol if tol is None else tol
    if window is None:
        window = 4 * math.lcm(s.T_attacker, s.T_defender)
    clusters = detect_clusters(trace.final_state, tol)
    if trace.converged_at is None:
        verdict = "undecided"
    else:
        verdict = "consensus" if clusters.group_count == 1 else "clusters"

    steps = trace.steps
    if len(steps) < window:
        union_connected = None
    else:
        union_connected = True
        for start in range(len(steps) - window + 1):
            edges = frozenset().union(*(st.resolved_edges for st in steps[start : start + window]))
            if not is_connected(Graph(s.graph.n, edges)):
                union_connected = False
                break
    return ConsensusVerdict(verdict=verdict, clusters=clusters, union_connected=union_connected)


# --- brute-force plan search ----------------------------------------------------


def _all_attacks(g: Graph, cm: CostModel, params: EnergyParams) -> list[tuple[AttackAction, Fraction]]:
    out = []
    if cm.mode == NODE_ATTACK:
        for marks in itertools.product((None, "normal", "strong"), repeat=g.n):
            strong_nodes = frozenset(v for v, m in zip(range(1, g.n + 1), marks) if m == "strong")
            normal_nodes = frozenset(v for v, m in zip(range(1, g.n + 1), marks) if m == "normal")
            strong = g.incident_edges(strong_nodes)
            normal = g.incident_edges(normal_nodes) - strong
            action = AttackAction(strong, normal, strong_nodes=strong_nodes, normal_nodes=normal_nodes)
            out.append((action, attack_cost(strong_nodes, normal_nodes, cm, params)))
        return out
    for marks in itertools.product((None, "normal", "strong"), repeat=len(g.edges)):
        strong = frozenset(e for e, m in zip(g.sorted_edges, marks) if m == "strong")
        normal = frozenset(e for e, m in zip(g.sorted_edges, marks) if m == "normal")
        out.append((AttackAction(strong, normal), attack_cost(strong, normal, cm, params)))
    return out


def _all_defenses(g: Graph) -> list[DefenseAction]:
    edges = g.sorted_edges
    out = []
    for i in range(len(edges) + 1):
        for combo in itertools.combinations(edges, i):
            out.append(DefenseAction(frozenset(combo)))
    return out


class _Budget:
    def __init__(self, bound: int):
        self.bound = bound
        self.used = 0

    def tick(self) -> None:
        self.used += 1
        if self.used > self.bound:
            raise WorkBoundExceeded(f"plan search exceeded {self.bound} leaf evaluations")


class _BruteForce:
    """Plan enumeration with freshly recomputed opponent behavior.

    Every mover plan is realized step by step: fixed opponent segments replay
    the committed actions, predicted segments re-solve the opponent's own
    objective by plain recursion. No value is memoized and no search is shared
    with the backward-induction solver.
    """

    def __init__(self, ctx: SolveContext, work: _Budget):
        self.ctx = ctx
        self.work = work
        self.g = ctx.base_graph
        self.cm = ctx.cost_model
        self.att_p = ctx.attacker_params
        self.def_p = ctx.defender_params
        self.w_end = ctx.t0 + ctx.horizon(ctx.mover) - 1
        self.layout = opponent_layout(ctx)
        self.attacks = _all_attacks(self.g, self.cm, self.att_p)
        self.defenses = _all_defenses(self.g)

    def _feasible_attacks(self, t: int, sa: Fraction):
        limit = budget_at(self.att_p, t) - sa
        return [(a, c) for a, c in self.attacks if c <= limit or a.size == 0]

    def _feasible_defenses(self, t: int, sd: Fraction, normal: frozenset[Edge]):
        limit = budget_at(self.def_p, t) - sd
        out = []
        for d in self.defenses:
            cost, _ = defense_cost(d.recover, normal, self.cm, self.def_p)
            if cost <= limit or d.size == 0:
                out.append((d, cost))
        return out

    def _step(self, x: State, attack: AttackAction, defense: DefenseAction):
        _, resolved = apply_actions(self.g, attack.strong, attack.normal, defense.recover)
        x1 = consensus_step(x, resolved, self.ctx.weights)
        payoff = self.ctx.util.a * state_difference(x1) - self.ctx.util.b * agent_group_index(resolved)
        return x1, payoff

    # plain-recursive predictions: attacker leads, defender follows, both modeled

    def _pick(self, cands, player, t, end, spent):
        top = max(v for _, v in cands)
        return tie_break(
            [(a, top) for a, v in cands if v == top],
            self.ctx,
            player=player,
            step_time=t,
            window_end=end,
            spent=spent,
        )

    def _predict_defense(self, t, x, sa, sd, end, attack, cost_a):
        cands = []
        for d, cost_d in self._feasible_defenses(t, sd, attack.normal):
            x1, payoff = self._step(x, attack, d)
            tail = self._predict_value(t + 1, x1, sa + cost_a, sd + cost_d, end)
            cands.append(((d, cost_d), -payoff - tail))
        d = self._pick([(dc[0], v) for dc, v in cands], DEFENDER, t, end, sd)
        return d, next(c for (dd, c), _ in cands if dd == d)

    def _predict_attack(self, t, x, sa, sd, end):
        cands = []
        for a, cost_a in self._feasible_attacks(t, sa):
            d, cost_d = self._predict_defense(t, x, sa, sd, end, a, cost_a)
            x1, payoff = self._step(x, a, d)
            tail = self._predict_value(t + 1, x1, sa + cost_a, sd + cost_d, end)
            cands.append(((a, cost_a), payoff + tail))
        a = self._pick([(ac[0], v) for ac, v in cands], ATTACKER, t, end, sa)
        return a, next(c for (aa, c), _ in cands if aa == a)

    def _predict_value(self, t, x, sa, sd, end) -> Fraction:
        if t > end:
            self.work.tick()
            return Fraction(0)
        best = None
        for a, cost_a in self._feasible_attacks(t, sa):
            d, cost_d = self._predict_defense(t, x, sa, sd, end, a, cost_a)
            x1, payoff = self._step(x, a, d)
            val = payoff + self._predict_value(t + 1, x1, sa + cost_a, sd + cost_d, end)
            if best is None or val > best:
                best = val
        return best

    # realized opponent action at one step of a mover trajectory

    def _opponent_at(self, t, x, sa, sd, mover_action=None, mover_cost=None):
        slot = self.layout[t]
        opp = opponent(self.ctx.mover)
        if slot.kind == FIXED:
            action = slot.action
            if opp == DEFENDER:
                cost, _ = defense_cost(action.recover, mover_action.normal, self.cm, self.def_p)
            elif action.node_mode:
                cost = attack_cost(action.strong_nodes, action.normal_nodes, self.cm, self.att_p)
            else:
                cost = attack_cost(action.strong, action.normal, self.cm, self.att_p)
            return action, cost
        if opp == DEFENDER:
            return self._predict_defense(t, x, sa, sd, slot.objective_end, mover_action, mover_cost)
        return self._predict_attack(t, x, sa, sd, slot.objective_end)

    # exhaustive mover plans

    def _extend(self, t, x, sa, sd, steps, total, found):
        if t > self.w_end:
            self.work.tick()
            found.append((tuple(steps), total))
            return
        if self.ctx.mover == ATTACKER:
            for a, cost_a in self._feasible_attacks(t, sa):
                d, cost_d = self._opponent_at(t, x, sa, sd, mover_action=a, mover_cost=cost_a)
                x1, payoff = self._step(x, a, d)
                self._extend(t + 1, x1, sa + cost_a, sd + cost_d, steps + [a], total + payoff, found)
        else:
            a, cost_a = self._opponent_at(t, x, sa, sd)
            for d, cost_d in self._feasible_defenses(t, sd, a.normal):
                x1, payoff = self._step(x, a, d)
                self._extend(t + 1, x1, sa + cost_a, sd + cost_d, steps + [d], total - payoff, found)

    def _filter_stepwise(self, plans):
        """Narrow equal-utility plans to one by per-step preference.

        An optimal plan is optimal after every prefix, so the survivors of each
        round share the realized prefix and the next step can be compared at
        identical energy states.
        """
        mover = self.ctx.mover
        x, sa, sd = self.ctx.state, self.ctx.attacker_spent, self.ctx.defender_spent
        for i, t in enumerate(range(self.ctx.t0, self.w_end + 1)):
            spent = sa if mover == ATTACKER else sd
            options = {p[i] for p in plans}
            chosen = tie_break(
                [(a, Fraction(0)) for a in sorted(options, key=lambda a: a.sort_key)],
                self.ctx,
                player=mover,
                step_time=t,
                window_end=self.w_end,
                spent=spent,
            )
            plans = [p for p in plans if p[i] == chosen]
            if mover == ATTACKER:
                cost_m = next(c for a, c in self.attacks if a == chosen)
                d, cost_o = self._opponent_at(t, x, sa, sd, mover_action=chosen, mover_cost=cost_m)
                x, _ = self._step(x, chosen, d)
                sa, sd = sa + cost_m, sd + cost_o
            else:
                a, cost_o = self._opponent_at(t, x, sa, sd)
                cost_m, _ = defense_cost(chosen.recover, a.normal, self.cm, self.def_p)
                x, _ = self._step(x, a, chosen)
                sa, sd = sa + cost_o, sd + cost_m
        assert len(plans) == 1
        return plans[0]

    def solve(self) -> Plan:
        found: list[tuple[tuple, Fraction]] = []
        ctx = self.ctx
        self._extend(ctx.t0, ctx.state, ctx.attacker_spent, ctx.defender_spent, [], Fraction(0), found)
        best = max(total for _, total in found)
        winners = [steps for steps, total in found if total == best]
        steps = self._filter_stepwise(winners)
        period = ctx.period(ctx.mover)
        return Plan(
            owner=ctx.mover,
            decision_index=ctx.t0 // period + 1,
            start_time=ctx.t0,
            steps=steps,
            utility=best,
        )


def brute_force_equilibrium(ctx: SolveContext, work_bound: int = 1_000_000) -> Plan:
    """Reference solution by whole-plan enumeration; see _BruteForce."""
    return _BruteForce(ctx, _Budget(work_bound)).solve()
