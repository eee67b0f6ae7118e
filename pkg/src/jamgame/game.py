"""Action spaces, step utilities, and the lookahead plan solver for one decision.

The solver builds one Stackelberg tree over the mover's lookahead window; within
every step the attacker commits first and the defender responds. Opponent actions
come from three sources, in priority order:

* a committed opponent block the mover is entitled to know is fixed data (only
  the block actually being applied counts; the opponent's unapplied plan tail is
  superseded by its next decision and is predicted instead);
* everything else is predicted by modeling the opponent's own optimization,
  anchored at the opponent's decision times and clipped to the mover's window;
* the mover's own actions are free variables optimized over the whole window.

Predictions are self-contained: a predicted player anticipates the other side
through the same model, never through the mover's actual candidate actions
beyond the current step, and responses are re-evaluated fresh at every step of
whatever branch the mover explores.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from itertools import product

from .dynamics import State, Weights, as_fraction, consensus_step, state_difference
from .energy import (
    NODE_ATTACK,
    WASTE_FREE,
    CostModel,
    EnergyParams,
    attack_cost,
    budget_at,
    defense_cost,
)
from .network import Edge, Graph, agent_group_index

ATTACKER = "attacker"
DEFENDER = "defender"


@dataclass(frozen=True)
class AttackAction:
    """Edges attacked strongly and normally; in node mode, also the nodes chosen."""

    strong: frozenset[Edge]
    normal: frozenset[Edge]
    strong_nodes: frozenset[int] = frozenset()
    normal_nodes: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        if self.strong & self.normal:
            raise ValueError(f"edges attacked both ways: {sorted(self.strong & self.normal)}")
        if self.strong_nodes & self.normal_nodes:
            raise ValueError(f"nodes attacked both ways: {sorted(self.strong_nodes & self.normal_nodes)}")

    @property
    def node_mode(self) -> bool:
        return bool(self.strong_nodes or self.normal_nodes)

    @property
    def size(self) -> int:
        """Number of items committed, at the granularity the action was chosen at."""
        if self.node_mode:
            return len(self.strong_nodes) + len(self.normal_nodes)
        return len(self.strong) + len(self.normal)

    @property
    def sort_key(self):
        if self.node_mode:
            return (tuple(sorted(self.strong_nodes)), tuple(sorted(self.normal_nodes)))
        return (tuple(sorted(self.strong)), tuple(sorted(self.normal)))

    @classmethod
    def empty(cls) -> AttackAction:
        return cls(frozenset(), frozenset())


@dataclass(frozen=True)
class DefenseAction:
    """Edges the defender allocates recovery to this step."""

    recover: frozenset[Edge]

    @property
    def size(self) -> int:
        return len(self.recover)

    @property
    def sort_key(self):
        return (tuple(sorted(self.recover)),)

    @classmethod
    def empty(cls) -> DefenseAction:
        return cls(frozenset())


@dataclass(frozen=True)
class UtilityWeights:
    """Weights on disagreement (a) and on fragmentation (b); not both zero."""

    a: Fraction = Fraction(1)
    b: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", as_fraction(self.a))
        object.__setattr__(self, "b", as_fraction(self.b))
        if self.a < 0 or self.b < 0:
            raise ValueError("utility weights must be nonnegative")
        if self.a == 0 and self.b == 0:
            raise ValueError("utility weights cannot both be zero")


@dataclass(frozen=True)
class Plan:
    """One decision's full lookahead plan; only the first T steps are ever applied."""

    owner: str
    decision_index: int
    start_time: int
    steps: tuple
    utility: Fraction

    def applied_prefix(self, period: int) -> tuple:
        return self.steps[:period]


@dataclass(frozen=True)
class CommittedBlock:
    """The applied prefix of an opponent plan that the mover is entitled to know."""

    owner: str
    decision_time: int
    actions: tuple


@dataclass(frozen=True)
class SolveContext:
    """Everything one decision depends on: topology, state, budgets, and knowledge."""

    base_graph: Graph
    weights: Weights
    util: UtilityWeights
    state: State
    t0: int
    mover: str
    h_attacker: int
    h_defender: int
    T_attacker: int
    T_defender: int
    attacker_params: EnergyParams
    defender_params: EnergyParams
    cost_model: CostModel = CostModel()
    attacker_spent: Fraction = Fraction(0)
    defender_spent: Fraction = Fraction(0)
    known_blocks: tuple[CommittedBlock, ...] = ()

    def __post_init__(self) -> None:
        if self.mover not in (ATTACKER, DEFENDER):
            raise ValueError(f"unknown mover {self.mover!r}")
        for h, T, who in (
            (self.h_attacker, self.T_attacker, "attacker"),
            (self.h_defender, self.T_defender, "defender"),
        ):
            if not 1 <= T <= h:
                raise ValueError(f"{who} needs 1 <= period <= horizon, got T={T}, h={h}")
        if len(self.state) != self.base_graph.n:
            raise ValueError("state length must match agent count")
        if self.t0 < 0 or self.t0 % self.period(self.mover) != 0:
            raise ValueError(f"time {self.t0} is not a {self.mover} decision time")

    def horizon(self, player: str) -> int:
        return self.h_attacker if player == ATTACKER else self.h_defender

    def period(self, player: str) -> int:
        return self.T_attacker if player == ATTACKER else self.T_defender

    def params(self, player: str) -> EnergyParams:
        return self.attacker_params if player == ATTACKER else self.defender_params

    def spent(self, player: str) -> Fraction:
        return self.attacker_spent if player == ATTACKER else self.defender_spent


def opponent(player: str) -> str:
    return DEFENDER if player == ATTACKER else ATTACKER


# --- action catalogs ---------------------------------------------------------


@lru_cache(maxsize=None)
def _attack_catalog(g: Graph, mode: str, beta_normal: Fraction, beta_strong: Fraction):
    """All attack actions on g with their costs, in canonical order."""
    out = []
    if mode == NODE_ATTACK:
        nodes = list(range(1, g.n + 1))
        for marks in product((0, 1, 2), repeat=len(nodes)):
            strong_nodes = frozenset(v for v, m in zip(nodes, marks) if m == 2)
            normal_nodes = frozenset(v for v, m in zip(nodes, marks) if m == 1)
            strong = g.incident_edges(strong_nodes)
            normal = g.incident_edges(normal_nodes) - strong
            action = AttackAction(strong, normal, strong_nodes, normal_nodes)
            cost = beta_strong * len(strong_nodes) + beta_normal * len(normal_nodes)
            out.append((cost, action))
    else:
        edges = list(sorted(g.edges))
        for marks in product((0, 1, 2), repeat=len(edges)):
            strong = frozenset(e for e, m in zip(edges, marks) if m == 2)
            normal = frozenset(e for e, m in zip(edges, marks) if m == 1)
            action = AttackAction(strong, normal)
            cost = beta_strong * len(strong) + beta_normal * len(normal)
            out.append((cost, action))
    out.sort(key=lambda ca: ca[1].sort_key)
    return tuple(out)


@lru_cache(maxsize=None)
def _defense_catalog(g: Graph):
    """All recovery subsets of the base edge set, in canonical order."""
    edges = list(sorted(g.edges))
    out = []
    for marks in product((0, 1), repeat=len(edges)):
        recover = frozenset(e for e, m in zip(edges, marks) if m == 1)
        out.append(DefenseAction(recover))
    out.sort(key=lambda d: d.sort_key)
    return tuple(out)


def enumerate_attacks(g: Graph, ctx: SolveContext, step_time: int, spent: Fraction | None = None):
    """Attack actions affordable at step_time given energy spent so far."""
    spent = ctx.attacker_spent if spent is None else spent
    p = ctx.attacker_params
    limit = budget_at(p, step_time) - spent
    catalog = _attack_catalog(g, ctx.cost_model.mode, p.beta_normal, p.beta_strong)
    return [a for cost, a in catalog if cost <= limit or a.size == 0]


def enumerate_defenses(
    g: Graph,
    ctx: SolveContext,
    step_time: int,
    spent: Fraction | None = None,
    attacked_normal: frozenset[Edge] | None = None,
):
    """Recovery actions affordable at step_time.

    Waste-free pricing needs the step's normally attacked edges; without them the
    full set is priced, which is exact in the default charging mode and a safe
    upper bound otherwise.
    """
    spent = ctx.defender_spent if spent is None else spent
    p = ctx.defender_params
    limit = budget_at(p, step_time) - spent
    out = []
    for d in _defense_catalog(g):
        if ctx.cost_model.waste == WASTE_FREE and attacked_normal is not None:
            cost, _ = defense_cost(d.recover, attacked_normal, ctx.cost_model, p)
        else:
            cost = p.beta_recover * len(d.recover)
        if cost <= limit or d.size == 0:
            out.append(d)
    return out


def step_payoff(x_next: State, g_resolved: Graph, w: UtilityWeights) -> Fraction:
    """Attacker-side step summand a*disagreement(x_next) - b*group_index(g_resolved).

    The defender's summand is the exact negation.
    """
    total = Fraction(0)
    if w.a != 0:
        total += w.a * state_difference(x_next)
    if w.b != 0:
        total -= w.b * agent_group_index(g_resolved)
    return total


# --- tie-breaking ------------------------------------------------------------


def can_sustain_full_action(
    params: EnergyParams,
    player: str,
    g: Graph,
    cm: CostModel,
    spent: Fraction,
    t: int,
    window_end: int,
) -> bool:
    """True iff the player could afford its maximal action at every step t..window_end."""
    if player == ATTACKER:
        items = g.n if cm.mode == NODE_ATTACK else len(g.edges)
        per_step = params.beta_strong * items
    else:
        per_step = params.beta_recover * len(g.edges)
    running = spent
    for step in range(t, window_end + 1):
        running += per_step
        if running > budget_at(params, step):
            return False
    return True


def _prefers(candidate, incumbent, want_more: bool) -> bool:
    """Preference among equal-value actions: size by energy stance, then canonical order."""
    if candidate.size != incumbent.size:
        return candidate.size > incumbent.size if want_more else candidate.size < incumbent.size
    return candidate.sort_key < incumbent.sort_key


def tie_break(
    candidates,
    ctx: SolveContext,
    player: str | None = None,
    step_time: int | None = None,
    window_end: int | None = None,
    spent: Fraction | None = None,
):
    """Pick one action among equal-utility candidates.

    A player that can sustain its maximal action through the remaining window
    prefers acting on more items; otherwise on fewer. Residual ties go to the
    canonically smallest action.
    """
    if not candidates:
        raise ValueError("tie_break needs at least one candidate")
    utilities = {u for _, u in candidates}
    if len(utilities) > 1:
        raise ValueError("tie_break candidates must share one utility value")
    player = ctx.mover if player is None else player
    step_time = ctx.t0 if step_time is None else step_time
    if window_end is None:
        window_end = ctx.t0 + ctx.horizon(player) - 1
    spent = ctx.spent(player) if spent is None else spent
    want_more = can_sustain_full_action(
        ctx.params(player), player, ctx.base_graph, ctx.cost_model, spent, step_time, window_end
    )
    best = candidates[0][0]
    for action, _ in candidates[1:]:
        if _prefers(action, best, want_more):
            best = action
    return best


# --- opponent layout ---------------------------------------------------------

FIXED = "fixed"
PREDICTED = "predicted"


@dataclass(frozen=True)
class OpponentSlot:
    """Where one step's opponent action comes from inside the mover's window."""

    kind: str
    action: object = None
    objective_end: int = -1


def opponent_layout(ctx: SolveContext) -> dict[int, OpponentSlot]:
    """Assign every window step an opponent-action source.

    The opponent's currently applied block is fixed if known, else predicted with
    the block owner's own objective window. Later opponent processes are predicted
    with their full windows clipped to the mover's, each starting where the
    previous one's territory ends.
    """
    w_end = ctx.t0 + ctx.horizon(ctx.mover) - 1
    opp = opponent(ctx.mover)
    T_o, h_o = ctx.period(opp), ctx.horizon(opp)
    slots: dict[int, OpponentSlot] = {}
    covered = ctx.t0 - 1

    cur_anchor = (ctx.t0 // T_o) * T_o
    if cur_anchor < ctx.t0:
        block_end = min(cur_anchor + T_o - 1, w_end)
        known = next(
            (b for b in ctx.known_blocks if b.owner == opp and b.decision_time == cur_anchor),
            None,
        )
        for t in range(ctx.t0, block_end + 1):
            if known is not None:
                slots[t] = OpponentSlot(FIXED, action=known.actions[t - cur_anchor])
            else:
                slots[t] = OpponentSlot(PREDICTED, objective_end=min(cur_anchor + h_o - 1, w_end))
        covered = block_end
        anchor = cur_anchor + T_o
    else:
        anchor = cur_anchor

    while covered < w_end:
        start = max(anchor, covered + 1)
        end = min(anchor + h_o - 1, w_end)
        for t in range(start, end + 1):
            slots[t] = OpponentSlot(PREDICTED, objective_end=end)
        covered = max(covered, end)
        anchor += T_o
    return slots


# --- evaluation cache --------------------------------------------------------


class StepCache:
    """Memoized graph resolution, consensus updates, and step payoffs.

    Shared across decisions of one run so repeated (state, topology) pairs are
    evaluated once.
    """

    def __init__(self, g0: Graph, weights: Weights, util: UtilityWeights):
        self.g0 = g0
        self.weights = weights
        self.util = util
        self._resolved: dict = {}
        self._next: dict = {}
        self._payoff: dict = {}

    def resolved_edges(self, attack: AttackAction, defense: DefenseAction) -> frozenset[Edge]:
        key = (attack.strong, attack.normal, defense.recover)
        hit = self._resolved.get(key)
        if hit is None:
            hit = (self.g0.edges - attack.strong - attack.normal) | (defense.recover & attack.normal)
            self._resolved[key] = hit
        return hit

    def step(self, x: State, attack: AttackAction, defense: DefenseAction) -> tuple[State, Fraction]:
        """Apply one resolved step: returns (next state, attacker-side payoff)."""
        edges = self.resolved_edges(attack, defense)
        skey = (x, edges)
        x1 = self._next.get(skey)
        if x1 is None:
            x1 = consensus_step(x, Graph(self.g0.n, edges), self.weights)
            self._next[skey] = x1
        pkey = (x1, edges)
        payoff = self._payoff.get(pkey)
        if payoff is None:
            payoff = step_payoff(x1, Graph(self.g0.n, edges), self.util)
            self._payoff[pkey] = payoff
        return x1, payoff


# --- the solver --------------------------------------------------------------


class _Solver:
    """Backward induction over the mover's window with predicted opponents."""

    def __init__(self, ctx: SolveContext, cache: StepCache | None = None):
        self.ctx = ctx
        self.g = ctx.base_graph
        self.cm = ctx.cost_model
        self.att_p = ctx.attacker_params
        self.def_p = ctx.defender_params
        self.cache = cache if cache is not None else StepCache(self.g, ctx.weights, ctx.util)
        self.w_end = ctx.t0 + ctx.horizon(ctx.mover) - 1
        self.layout = opponent_layout(ctx)
        self.att_catalog = _attack_catalog(self.g, self.cm.mode, self.att_p.beta_normal, self.att_p.beta_strong)
        self.def_catalog = _defense_catalog(self.g)
        self._outer_memo: dict = {}
        self._inner_memo: dict = {}
        self._resp_memo: dict = {}

    # feasible candidates at absolute time t

    def _attacks(self, t: int, sa: Fraction):
        limit = budget_at(self.att_p, t) - sa
        return [(c, a) for c, a in self.att_catalog if c <= limit or a.size == 0]

    def _defenses(self, t: int, sd: Fraction, normal: frozenset[Edge]):
        limit = budget_at(self.def_p, t) - sd
        out = []
        for d in self.def_catalog:
            cost, _ = defense_cost(d.recover, normal, self.cm, self.def_p)
            if cost <= limit or d.size == 0:
                out.append((cost, d))
        return out

    def _sustain(self, player: str, spent: Fraction, t: int, end: int) -> bool:
        return can_sustain_full_action(
            self.ctx.params(player), player, self.g, self.cm, spent, t, end
        )

    # inner model: both sides predicted, objective window [t, end]

    def inner_value(self, t: int, x: State, sa: Fraction, sd: Fraction, end: int) -> Fraction:
        """Attacker-side value of the modeled tail [t, end]."""
        if t > end:
            return Fraction(0)
        key = (t, x, sa, sd, end)
        hit = self._inner_memo.get(key)
        if hit is None:
            hit = self._inner_step(t, x, sa, sd, end)
            self._inner_memo[key] = hit
        return hit[0]

    def _inner_step(self, t, x, sa, sd, end):
        want_more = self._sustain(ATTACKER, sa, t, end)
        best = None
        for cost_a, atk in self._attacks(t, sa):
            d, cost_d = self.predicted_defense(t, x, sa, sd, end, atk, cost_a)
            x1, payoff = self.cache.step(x, atk, d)
            val = payoff + self.inner_value(t + 1, x1, sa + cost_a, sd + cost_d, end)
            if best is None or val > best[0] or (val == best[0] and _prefers(atk, best[1], want_more)):
                best = (val, atk, d)
        return best

    def predicted_defense(self, t, x, sa, sd, end, attack, attack_cost_):
        """Defender response to a same-step attack, optimizing its side over [t, end]."""
        key = (t, x, sa, sd, end, attack)
        hit = self._resp_memo.get(key)
        if hit is not None:
            return hit
        want_more = self._sustain(DEFENDER, sd, t, end)
        sa1 = sa + attack_cost_
        best = None
        for cost_d, d in self._defenses(t, sd, attack.normal):
            x1, payoff = self.cache.step(x, attack, d)
            val = -payoff - self.inner_value(t + 1, x1, sa1, sd + cost_d, end)
            if best is None or val > best[0] or (val == best[0] and _prefers(d, best[1], want_more)):
                best = (val, d, cost_d)
        result = (best[1], best[2])
        self._resp_memo[key] = result
        return result

    def predicted_attack(self, t, x, sa, sd, end):
        """Leading attack at t from the self-contained model over [t, end]."""
        key = (t, x, sa, sd, end)
        hit = self._inner_memo.get(key)
        if hit is None:
            hit = self._inner_step(t, x, sa, sd, end)
            self._inner_memo[key] = hit
        return hit[1]

    # outer recursion: the mover's own objective over [t, w_end]

    def outer(self, t: int, x: State, sa: Fraction, sd: Fraction):
        """Returns (mover-side value of [t, w_end], mover action at t, successor key)."""
        if t > self.w_end:
            return (Fraction(0), None, None)
        key = (t, x, sa, sd)
        hit = self._outer_memo.get(key)
        if hit is None:
            if self.ctx.mover == ATTACKER:
                hit = self._outer_attacker(t, x, sa, sd)
            else:
                hit = self._outer_defender(t, x, sa, sd)
            self._outer_memo[key] = hit
        return hit

    def _opponent_action_cost(self, action) -> Fraction:
        if isinstance(action, AttackAction):
            if action.node_mode:
                return attack_cost(action.strong_nodes, action.normal_nodes, self.cm, self.att_p)
            return attack_cost(action.strong, action.normal, self.cm, self.att_p)
        raise TypeError(f"expected an attack, got {action!r}")

    def _outer_attacker(self, t, x, sa, sd):
        slot = self.layout[t]
        want_more = self._sustain(ATTACKER, sa, t, self.w_end)
        best = None
        for cost_a, atk in self._attacks(t, sa):
            if slot.kind == FIXED:
                d = slot.action
                cost_d, _ = defense_cost(d.recover, atk.normal, self.cm, self.def_p)
            else:
                d, cost_d = self.predicted_defense(t, x, sa, sd, slot.objective_end, atk, cost_a)
            x1, payoff = self.cache.step(x, atk, d)
            succ = (x1, sa + cost_a, sd + cost_d)
            val = payoff + self.outer(t + 1, *succ)[0]
            if best is None or val > best[0] or (val == best[0] and _prefers(atk, best[1], want_more)):
                best = (val, atk, succ)
        return best

    def _outer_defender(self, t, x, sa, sd):
        slot = self.layout[t]
        if slot.kind == FIXED:
            atk = slot.action
        else:
            atk = self.predicted_attack(t, x, sa, sd, slot.objective_end)
        cost_a = self._opponent_action_cost(atk)
        want_more = self._sustain(DEFENDER, sd, t, self.w_end)
        best = None
        for cost_d, d in self._defenses(t, sd, atk.normal):
            x1, payoff = self.cache.step(x, atk, d)
            succ = (x1, sa + cost_a, sd + cost_d)
            val = -payoff + self.outer(t + 1, *succ)[0]
            if best is None or val > best[0] or (val == best[0] and _prefers(d, best[1], want_more)):
                best = (val, d, succ)
        return best

    def solve(self) -> Plan:
        ctx = self.ctx
        total, _, _ = self.outer(ctx.t0, ctx.state, ctx.attacker_spent, ctx.defender_spent)
        steps = []
        node = (ctx.state, ctx.attacker_spent, ctx.defender_spent)
        for t in range(ctx.t0, self.w_end + 1):
            _, action, succ = self.outer(t, *node)
            steps.append(action)
            node = succ
        period = ctx.period(ctx.mover)
        return Plan(
            owner=ctx.mover,
            decision_index=ctx.t0 // period + 1,
            start_time=ctx.t0,
            steps=tuple(steps),
            utility=total,
        )


def solve_decision(ctx: SolveContext, mover: str | None = None, cache: StepCache | None = None) -> Plan:
    """Compute the mover's optimal plan over its window at decision time ctx.t0."""
    if mover is not None and mover != ctx.mover:
        ctx = replace(ctx, mover=mover)
    return _Solver(ctx, cache).solve()
