"""Natural strategies: guarded-command lists, the complexity metric,
first-match rule selection, the mutual-exclusion transformation, and
strategy fixing (pruning a network down to on-strategy behavior)."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Union

from .errors import DefinitionError, StrategyError
from .model import (
    FALSE, TRUE, WAIT_ACTION, And, Comparison, Edge, FalseConst,
    GlobalState, GuardExpr, LocAtom, Network, Not, Or, TrueConst, VarAtom,
    and_all, available_actions, eval_guard, or_all,
)


class _Wildcard:
    """The ⋆ action: any action available to the agent at the matched state."""

    def __repr__(self):
        return "*"

    def __str__(self):
        return "*"


WILDCARD = _Wildcard()
ActionSpec = Union[str, _Wildcard]


@dataclass(frozen=True)
class Rule:
    guard: GuardExpr
    action: ActionSpec

    def __str__(self):
        return f"when {self.guard} do {self.action};"


@dataclass(frozen=True)
class NaturalStrategy:
    """Ordered guarded-command list for one agent.

    Total strategies end in a ⊤-guarded rule and always prescribe something;
    an unavailable final concrete action is an error there. Partial
    strategies (no ⊤ rule, or declared `partial`) may run out of matching
    rules, in which case the agent simply stops acting.
    """

    agent: str
    rules: tuple[Rule, ...]
    name: str = ""
    declared_partial: bool = False

    def __post_init__(self):
        if not self.rules:
            raise DefinitionError("a strategy needs at least one rule")

    @property
    def is_total(self) -> bool:
        return (isinstance(self.rules[-1].guard, TrueConst)
                and not self.declared_partial)

    def without_rule(self, index: int) -> "NaturalStrategy":
        """1-based removal, handy for the 'drop one guarded command' variants."""
        rules = tuple(r for i, r in enumerate(self.rules, start=1) if i != index)
        return replace(self, rules=rules, name=f"{self.name}-r{index}" if self.name else "")


# A collective strategy maps each coalition member to its strategy.
CollectiveStrategy = dict[str, NaturalStrategy]


def collective(*strategies: NaturalStrategy) -> CollectiveStrategy:
    out: CollectiveStrategy = {}
    for s in strategies:
        if s.agent in out:
            raise DefinitionError(f"two strategies for agent {s.agent}")
        out[s.agent] = s
    return out


# ---------------------------------------------------------------------------
# Complexity metric

PAPER_CONVENTION = "paper"
LITERAL_CONVENTION = "literal"


def guard_length(g: GuardExpr, convention: str = PAPER_CONVENTION) -> int:
    """Symbol count of a guard, parentheses excluded.

    Atoms, ⊤ and each !/&&/|| cost 1. Under the default (calibrated)
    convention an atomic comparison like `i == n` also costs 1; the literal
    convention charges 3 (operand, operator, operand)."""
    if isinstance(g, (TrueConst, FalseConst, LocAtom, VarAtom)):
        return 1
    if isinstance(g, Comparison):
        return 1 if convention == PAPER_CONVENTION else 3
    if isinstance(g, Not):
        return 1 + guard_length(g.sub, convention)
    if isinstance(g, (And, Or)):
        return 1 + guard_length(g.left, convention) + guard_length(g.right, convention)
    raise TypeError(f"not a guard expression: {g!r}")


def complexity(s: Union[NaturalStrategy, CollectiveStrategy],
               convention: str = PAPER_CONVENTION) -> int:
    """Sum of guard lengths over all rules; collective = sum over members."""
    if isinstance(s, NaturalStrategy):
        return sum(guard_length(r.guard, convention) for r in s.rules)
    return sum(complexity(member, convention) for member in s.values())


# ---------------------------------------------------------------------------
# Matching

def match_rule(net: Network, q: GlobalState, s: NaturalStrategy) -> Optional[int]:
    """First rule (1-based) whose guard holds at q and whose action is
    available there; the wildcard counts as available whenever any action is.

    Returns None when a partial strategy runs out of rules, or when the agent
    has no available action at all (nothing to prescribe). Raises
    StrategyError when actions exist but a total strategy's final concrete
    action is not among them.
    """
    avail = available_actions(net, q, s.agent)
    for i, rule in enumerate(s.rules, start=1):
        if not eval_guard(rule.guard, q, net):
            continue
        if rule.action is WILDCARD:
            if avail:
                return i
        elif rule.action in avail:
            return i
    if not avail:
        return None
    if s.is_total:
        raise StrategyError(
            f"strategy {s.name or s.agent}: no rule matches at {q} "
            f"(final rule's action unavailable)")
    return None


def allowed_actions(net: Network, q: GlobalState, s: NaturalStrategy) -> set[str]:
    """Actions the strategy permits at q: the matched rule's action, or every
    available action when the wildcard matches, or nothing on no-match."""
    i = match_rule(net, q, s)
    if i is None:
        return set()
    rule = s.rules[i - 1]
    if rule.action is WILDCARD:
        return available_actions(net, q, s.agent)
    return {rule.action}


def audit_strategy(net: Network, s: NaturalStrategy, graph=None) -> None:
    """Availability audit over the explored state space: matching must never
    fail with an error, i.e. wherever some rule's guard holds and actions
    exist, a rule fires."""
    from .model import explore  # local import to avoid cycle at module load
    g = graph if graph is not None else explore(net)
    for q in g.states:
        match_rule(net, q, s)  # raises StrategyError on a violation


# ---------------------------------------------------------------------------
# Guard simplification (used when conjoining strategy guards onto edges)

def _loc_disjuncts(g: GuardExpr, agent: str) -> Optional[list[str]]:
    """If g is a disjunction of location atoms of `agent`, their names in
    order; else None."""
    if isinstance(g, LocAtom) and g.agent == agent:
        return [g.location]
    if isinstance(g, Or):
        left = _loc_disjuncts(g.left, agent)
        right = _loc_disjuncts(g.right, agent)
        if left is not None and right is not None:
            return left + right
    return None


def simplify(g: GuardExpr, agent: Optional[str] = None) -> GuardExpr:
    """Light structural simplification: boolean units, double negation, and
    (when `agent` is given) intersection of that agent's location-atom
    disjunctions, exploiting that an agent occupies exactly one location."""
    if isinstance(g, Not):
        sub = simplify(g.sub, agent)
        if isinstance(sub, TrueConst):
            return FALSE
        if isinstance(sub, FalseConst):
            return TRUE
        if isinstance(sub, Not):
            return sub.sub
        return Not(sub)
    if isinstance(g, And):
        left = simplify(g.left, agent)
        right = simplify(g.right, agent)
        if isinstance(left, FalseConst) or isinstance(right, FalseConst):
            return FALSE
        if isinstance(left, TrueConst):
            return right
        if isinstance(right, TrueConst):
            return left
        if agent is not None:
            ls = _loc_disjuncts(left, agent)
            rs = _loc_disjuncts(right, agent)
            if ls is not None and rs is not None:
                keep = [loc for loc in ls if loc in rs]
                if not keep:
                    return FALSE
                return or_all(LocAtom(agent, loc) for loc in keep)
        if left == right:
            return left
        return And(left, right)
    if isinstance(g, Or):
        left = simplify(g.left, agent)
        right = simplify(g.right, agent)
        if isinstance(left, TrueConst) or isinstance(right, TrueConst):
            return TRUE
        if isinstance(left, FalseConst):
            return right
        if isinstance(right, FalseConst):
            return left
        if left == right:
            return left
        return Or(left, right)
    return g


# ---------------------------------------------------------------------------
# Mutual exclusion and fixing

def specialize_at(g: GuardExpr, agent: str, location: str) -> GuardExpr:
    """Resolve `agent`'s own location atoms assuming it sits at `location`
    (sound on an edge whose source is `location`). Everything else stays."""
    if isinstance(g, LocAtom) and g.agent == agent:
        return TRUE if g.location == location else FALSE
    if isinstance(g, Not):
        return Not(specialize_at(g.sub, agent, location))
    if isinstance(g, And):
        return And(specialize_at(g.left, agent, location),
                   specialize_at(g.right, agent, location))
    if isinstance(g, Or):
        return Or(specialize_at(g.left, agent, location),
                  specialize_at(g.right, agent, location))
    return g


def make_mutually_exclusive(s: NaturalStrategy) -> NaturalStrategy:
    """Prefix every rule's guard with the negated guards of all previous
    rules; the final ⊤ rule (if any) is kept verbatim. Rule order and actions
    are unchanged.

    This is the syntactic form used for display and export. It is match-
    equivalent to the original whenever each earlier rule's action is
    available wherever its guard holds; `firing_exclusive` is the variant
    that also accounts for availability."""
    rules = list(s.rules)
    out: list[Rule] = []
    for i, rule in enumerate(rules):
        if i == len(rules) - 1 and isinstance(rule.guard, TrueConst):
            out.append(rule)
            continue
        prefix = [Not(r.guard) for r in rules[:i]]
        out.append(Rule(and_all(prefix + [rule.guard]), rule.action))
    return replace(s, rules=tuple(out),
                   name=f"{s.name}!me" if s.name else "")


def action_availability_guard(net: Network, agent: str, action: ActionSpec) -> GuardExpr:
    """State predicate 'this action is available to the agent': disjunction
    over the action's edges of at(source) ∧ edge guard. The wildcard (and any
    action of a lazy agent's `wait`) is available everywhere."""
    tpl = net.agent(agent)
    if action is WILDCARD or (tpl.lazy and action == WAIT_ACTION):
        return TRUE
    parts = []
    for e in tpl.edges:
        if e.action == action:
            parts.append(simplify(And(LocAtom(agent, e.source), e.guard), agent))
    return simplify(or_all(parts), agent)


def firing_exclusive(net: Network, s: NaturalStrategy) -> NaturalStrategy:
    """Mutual exclusion on firing conditions: rule i gets
    ¬(g_1 ∧ avail_1) ∧ … ∧ ¬(g_{i-1} ∧ avail_{i-1}) ∧ g_i.

    For strategies where availability is implied by the guards this
    simplifies to exactly `make_mutually_exclusive`; in general it is the
    form that preserves first-match semantics (a guard-true rule whose action
    is unavailable is skipped, so its bare negation must not poison later
    rules)."""
    fire = [simplify(And(r.guard, action_availability_guard(net, s.agent, r.action)),
                     s.agent)
            for r in s.rules]
    out: list[Rule] = []
    for i, rule in enumerate(s.rules):
        prefix = [simplify(Not(f), s.agent) for f in fire[:i]]
        guard = simplify(and_all(prefix + [rule.guard]), s.agent)
        out.append(Rule(guard, rule.action))
    return replace(s, rules=tuple(out), name=f"{s.name}!fx" if s.name else "")


def fix_strategy(net: Network, s_A: CollectiveStrategy) -> Network:
    """Conjoin each coalition agent's (availability-aware) mutually exclusive
    rule guards onto its edges: an edge with action α keeps
    guard ∧ ⋁ {exclusive guard of rule i | act_i = α or act_i = ⋆}.

    Off-strategy edges (empty disjunction, or one that simplifies to false)
    are removed. Lazy coalition agents get explicit `wait` self-loops guarded
    the same way, so idling survives exactly where a wait/wildcard rule
    matches. Non-coalition agents are untouched."""
    new_agents = []
    for tpl in net.agents:
        s = s_A.get(tpl.name)
        if s is None:
            new_agents.append(tpl)
            continue
        excl = firing_exclusive(net, s)
        by_action: dict[object, list[GuardExpr]] = {}
        wildcard_guards: list[GuardExpr] = []
        for rule in excl.rules:
            if rule.action is WILDCARD:
                wildcard_guards.append(rule.guard)
            else:
                by_action.setdefault(rule.action, []).append(rule.guard)
        def strategy_guard(action: str) -> GuardExpr:
            parts = by_action.get(action, []) + wildcard_guards
            return simplify(or_all(parts), tpl.name)
        new_edges = []
        for e in tpl.edges:
            extra = strategy_guard(e.action)
            guard = simplify(And(e.guard, extra), tpl.name)
            if isinstance(guard, FalseConst):
                continue
            # edges whose guard is false at their own source can never fire
            dead_check = simplify(specialize_at(guard, tpl.name, e.source),
                                  tpl.name)
            if isinstance(dead_check, FalseConst):
                continue
            new_edges.append(replace(e, guard=guard))
        if tpl.lazy:
            wait_guard = strategy_guard(WAIT_ACTION)
            for loc in tpl.locations:
                if isinstance(simplify(specialize_at(wait_guard, tpl.name, loc),
                                       tpl.name), FalseConst):
                    continue
                guard = simplify(And(LocAtom(tpl.name, loc), wait_guard), tpl.name)
                new_edges.append(Edge(source=loc, target=loc, action=WAIT_ACTION,
                                      guard=guard))
        new_agents.append(replace(tpl, edges=tuple(new_edges), lazy=False))
    for agent in s_A:
        net.agent(agent)  # unknown coalition member -> DefinitionError
    return replace(net, agents=tuple(new_agents))
