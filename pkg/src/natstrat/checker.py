"""Query evaluation: universal temporal checking over outcome graphs,
knowledge via observational indistinguishability, strategy verification
against a bound, and bounded brute-force strategy synthesis.

Truth values are three-valued at the result level: True, False, or None
("unknown", produced only when an enumeration cap is hit inside synthesis).
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .errors import DefinitionError, ResourceLimitError, StrategyError
from .formula import (
    FAnd, FAtom, FImplies, FNot, FOr, Formula, Knows, Strategic,
)
from .model import (
    DEFAULT_STATE_CAP, And, GlobalState, GuardExpr, LocAtom, Network, Not,
    Or, StateGraph, TrueConst, VarAtom, eval_guard, explore,
)
from .outcome import OutcomeGraph, outcomes
from .strategy import (
    WILDCARD, CollectiveStrategy, NaturalStrategy, Rule, complexity,
)

Verdict = Optional[bool]


@dataclass
class CheckStats:
    states_explored: int = 0
    strategies_enumerated: int = 0
    wall_time: float = 0.0


@dataclass
class CheckResult:
    verdict: Verdict
    witness_strategy: Optional[CollectiveStrategy] = None
    witness_path: tuple[int, ...] = ()
    reason: str = ""
    stats: CheckStats = field(default_factory=CheckStats)

    def __bool__(self):
        return bool(self.verdict)


# ---------------------------------------------------------------------------
# Universal temporal checking on an outcome graph

def _af_states(og: OutcomeGraph, goal: set[int]) -> set[int]:
    """States from which every maximal trace reaches `goal` (least fixpoint:
    goal states, plus non-terminal states all of whose successors qualify)."""
    good = set(goal)
    changed = True
    while changed:
        changed = False
        for i in range(og.n_states):
            if i in good or og.is_terminal(i):
                continue
            if all(t.target in good for t in og.out_edges(i)):
                good.add(i)
                changed = True
    return good


def _au_states(og: OutcomeGraph, hold: set[int], until: set[int]) -> set[int]:
    """A(hold U until), strong until."""
    good = set(until)
    changed = True
    while changed:
        changed = False
        for i in range(og.n_states):
            if i in good or i not in hold or og.is_terminal(i):
                continue
            if all(t.target in good for t in og.out_edges(i)):
                good.add(i)
                changed = True
    return good


def _reachable_from(og: OutcomeGraph, start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        i = stack.pop()
        for j in og.successors(i):
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return seen


def _bad_witness(og: OutcomeGraph, start: int, good: set[int]) -> tuple[int, ...]:
    """Shortest path from start into the non-`good` region; extended to a
    terminal or around a cycle so the trace is recognizably maximal."""
    from collections import deque
    prev = {start: start}
    dq = deque([start])
    target = None
    while dq:
        i = dq.popleft()
        if i not in good:
            target = i
            break
        for j in sorted(og.successors(i)):
            if j not in prev:
                prev[j] = i
                dq.append(j)
    if target is None:
        return ()
    path = [target]
    while path[-1] != start:
        path.append(prev[path[-1]])
    path.reverse()
    # extend within the bad region until a repeat or a terminal
    seen = set(path)
    cur = target
    while not og.is_terminal(cur):
        nxt = min(j for j in og.successors(cur) if j not in good) \
            if any(j not in good for j in og.successors(cur)) else None
        if nxt is None:
            break
        path.append(nxt)
        if nxt in seen:
            break
        seen.add(nxt)
        cur = nxt
    return tuple(path)


def check_temporal_universal(og: OutcomeGraph, op: str,
                             subgoals: Sequence[set[int]],
                             start: Optional[int] = None) -> CheckResult:
    """Check AX/AF/AG/A(U) of pre-labeled state sets over all maximal traces
    of the outcome graph, from `start` (default: the graph's start state).
    Returns a counterexample path or lasso on failure."""
    q = og.initial if start is None else start
    if op == "X":
        goal = subgoals[0]
        bad = [t.target for t in og.out_edges(q) if t.target not in goal]
        if bad:
            return CheckResult(False, witness_path=(q, bad[0]),
                               reason="a successor falsifies the X-subformula")
        return CheckResult(True)
    if op == "F":
        good = _af_states(og, subgoals[0])
        if q in good:
            return CheckResult(True)
        return CheckResult(False, witness_path=_bad_witness(og, q, good),
                           reason="a maximal trace avoids the goal")
    if op == "G":
        safe = subgoals[0]
        reach = _reachable_from(og, q)
        bad = reach - safe
        if not bad:
            return CheckResult(True)
        return CheckResult(False, witness_path=_bad_witness(og, q, og_all(og) - bad),
                           reason="a reachable state falsifies the G-subformula")
    if op == "U":
        good = _au_states(og, subgoals[0], subgoals[1])
        if q in good:
            return CheckResult(True)
        return CheckResult(False, witness_path=_bad_witness(og, q, good),
                           reason="a maximal trace falsifies the until")
    raise DefinitionError(f"unknown temporal operator {op}")


def og_all(og: OutcomeGraph) -> set[int]:
    return set(range(og.n_states))


# ---------------------------------------------------------------------------
# Knowledge

def observation(net: Network, agent: str, q: GlobalState):
    """What `agent` observes in q: its own location, its local variables and
    all global variables."""
    pos = net.agent_pos(agent)
    values = tuple(
        v for (owner, _), v in zip(net.var_decls(), q.values)
        if owner is None or owner == agent)
    return (q.locations[pos], values)


def indistinguishability_classes(graph: StateGraph, agent: str) -> dict:
    classes: dict = {}
    for i, q in enumerate(graph.states):
        classes.setdefault(observation(graph.net, agent, q), set()).add(i)
    return classes


def eval_knows(graph: StateGraph, agent: str, state_set: set[int], i: int,
               classes: Optional[dict] = None) -> bool:
    """True iff every state of the graph the agent cannot distinguish from
    state i belongs to `state_set`."""
    if classes is None:
        classes = indistinguishability_classes(graph, agent)
    cls = classes[observation(graph.net, agent, graph.states[i])]
    return cls <= state_set


# ---------------------------------------------------------------------------
# Strategic verification

def verify_strategic(net: Network, q: Optional[GlobalState], coalition: Iterable[str],
                     k: int, op: str, goal_predicates: Sequence[Callable[[GlobalState], bool]],
                     s_A: CollectiveStrategy,
                     state_cap: int = DEFAULT_STATE_CAP) -> CheckResult:
    """<<coalition>>^<=k op(goals) with a supplied strategy: true iff the
    collective complexity is within the bound (strict gating) and the
    universal temporal check holds on the strategy's outcome graph."""
    coalition = frozenset(coalition)
    if coalition != frozenset(s_A):
        raise DefinitionError(
            f"strategy covers {sorted(s_A)} but the coalition is {sorted(coalition)}")
    t0 = time.perf_counter()
    c = complexity(s_A)
    if c > k:
        return CheckResult(False, reason=f"complexity {c} exceeds bound {k}",
                           stats=CheckStats(wall_time=time.perf_counter() - t0))
    og = outcomes(net, q, s_A, state_cap=state_cap)
    sets = [{i for i in range(og.n_states) if pred(og.state(i))}
            for pred in goal_predicates]
    res = check_temporal_universal(og, op, sets)
    res.witness_strategy = dict(s_A)
    res.stats = CheckStats(states_explored=og.n_states,
                           wall_time=time.perf_counter() - t0)
    return res


# ---------------------------------------------------------------------------
# Strategy synthesis

@dataclass(frozen=True)
class SynthesisConfig:
    enumeration_cap: int = 200_000
    state_cap: int = DEFAULT_STATE_CAP


def _guards_of_cost(vocab: Sequence[GuardExpr], cost: int,
                    memo: dict) -> list[GuardExpr]:
    """All guards of exactly `cost` symbols over the vocabulary: atoms cost 1,
    negation adds 1, each binary connective adds 1. Deduplicated by printed
    form; double negation skipped."""
    if cost in memo:
        return memo[cost]
    out: list[GuardExpr] = []
    seen: set[str] = set()
    if cost == 1:
        for atom in vocab:
            txt = str(atom)
            if txt not in seen:
                seen.add(txt)
                out.append(atom)
    elif cost >= 2:
        for sub in _guards_of_cost(vocab, cost - 1, memo):
            if not isinstance(sub, Not):
                g = Not(sub)
                txt = str(g)
                if txt not in seen:
                    seen.add(txt)
                    out.append(g)
        for lc in range(1, cost - 1):
            rc = cost - 1 - lc
            for left in _guards_of_cost(vocab, lc, memo):
                for right in _guards_of_cost(vocab, rc, memo):
                    for ctor in (And, Or):
                        g = ctor(left, right)
                        txt = str(g)
                        if txt not in seen:
                            seen.add(txt)
                            out.append(g)
    memo[cost] = out
    return out


def _agent_strategies(net: Network, agent: str, budget: int,
                      vocab: Sequence[GuardExpr]) -> Iterator[NaturalStrategy]:
    """Strategies for one agent of total complexity exactly `budget`:
    a prefix of guarded rules (guards over `vocab`, total cost budget-1)
    followed by the mandatory ⊤ rule. Mid-list ⊤ guards are skipped: any such
    list behaves like its cheaper truncation, which is enumerated earlier."""
    tpl = net.agent(agent)
    actions: list = sorted({e.action for e in tpl.edges})
    if tpl.lazy:
        from .model import WAIT_ACTION
        actions.append(WAIT_ACTION)
        actions.sort()
    action_specs: list = actions + [WILDCARD]
    memo: dict = {}
    prefix_budget = budget - 1
    if prefix_budget < 0:
        return

    def cost_splits(total: int) -> Iterator[tuple[int, ...]]:
        if total == 0:
            yield ()
            return
        for first in range(1, total + 1):
            for rest in cost_splits(total - first):
                yield (first,) + rest

    for split in cost_splits(prefix_budget):
        guard_pools = [_guards_of_cost(vocab, c, memo) for c in split]
        for guards in itertools.product(*guard_pools):
            for acts in itertools.product(action_specs, repeat=len(split)):
                for last in action_specs:
                    rules = tuple(Rule(g, a) for g, a in zip(guards, acts))
                    rules += (Rule(TrueConst(), last),)
                    yield NaturalStrategy(agent=agent, rules=rules)


def _splits(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _splits(total - first, parts - 1):
            yield (first,) + rest


def default_vocabulary(net: Network, coalition: Sequence[str]) -> list[GuardExpr]:
    """Coalition-observable atoms: each member's own location atoms plus
    every comparison and 0/1-variable atom occurring in that member's edge
    guards."""
    from .model import Comparison

    vocab: list[GuardExpr] = []
    seen: set[str] = set()

    def add(g: GuardExpr):
        txt = str(g)
        if txt not in seen:
            seen.add(txt)
            vocab.append(g)

    for agent in coalition:
        tpl = net.agent(agent)
        for loc in tpl.locations:
            add(LocAtom(agent, loc))
        for e in tpl.edges:
            stack = [e.guard]
            while stack:
                g = stack.pop()
                if isinstance(g, (Comparison, VarAtom)):
                    add(g)
                elif isinstance(g, Not):
                    stack.append(g.sub)
                elif isinstance(g, (And, Or)):
                    stack.extend((g.left, g.right))
    return vocab


def synthesize_strategic(net: Network, q: Optional[GlobalState],
                         coalition: Sequence[str], k: int, op: str,
                         goal_predicates: Sequence[Callable[[GlobalState], bool]],
                         vocabulary: Optional[Sequence[GuardExpr]] = None,
                         config: SynthesisConfig = SynthesisConfig()) -> CheckResult:
    """Enumerate collective natural strategies in nondecreasing complexity up
    to k (ties broken by rule count, then guard text) and return the first
    one whose outcome graph passes the universal temporal check. False means
    the enumeration was exhaustive; a cap raises ResourceLimitError so that
    'unknown' is never conflated with 'false'."""
    t0 = time.perf_counter()
    coalition = list(dict.fromkeys(coalition))
    if not coalition:
        res = verify_strategic(net, q, [], k, op, goal_predicates, {},
                               state_cap=config.state_cap)
        return res
    if k < len(coalition):
        # every member's strategy has at least the ⊤ rule, costing 1
        return CheckResult(False, reason=f"bound {k} below coalition size",
                           stats=CheckStats(wall_time=time.perf_counter() - t0))
    vocab = list(vocabulary) if vocabulary is not None else default_vocabulary(net, coalition)
    enumerated = 0
    for total in range(len(coalition), k + 1):
        candidates: list[CollectiveStrategy] = []
        for split in _splits(total, len(coalition)):
            pools = [list(_agent_strategies(net, a, b, vocab))
                     for a, b in zip(coalition, split)]
            for combo in itertools.product(*pools):
                candidates.append({s.agent: s for s in combo})
        candidates.sort(key=lambda c: (sum(len(s.rules) for s in c.values()),
                                       _strategy_text(c)))
        for cand in candidates:
            enumerated += 1
            if enumerated > config.enumeration_cap:
                raise ResourceLimitError(
                    f"synthesis cap {config.enumeration_cap} exceeded "
                    f"(verdict unknown)", partial=enumerated)
            try:
                og = outcomes(net, q, cand, state_cap=config.state_cap)
            except StrategyError:
                continue
            sets = [{i for i in range(og.n_states) if pred(og.state(i))}
                    for pred in goal_predicates]
            try:
                res = check_temporal_universal(og, op, sets)
            except StrategyError:
                continue
            if res.verdict:
                return CheckResult(
                    True, witness_strategy=cand,
                    reason=f"witness of complexity {complexity(cand)}",
                    stats=CheckStats(states_explored=og.n_states,
                                     strategies_enumerated=enumerated,
                                     wall_time=time.perf_counter() - t0))
    return CheckResult(False, reason="exhaustive enumeration",
                       stats=CheckStats(strategies_enumerated=enumerated,
                                        wall_time=time.perf_counter() - t0))


def _strategy_text(c: CollectiveStrategy) -> str:
    # '~' sorts after alphanumerics, so wildcard rules come after concrete
    # actions among candidates of equal complexity and rule count
    return " | ".join(
        f"{a}: " + " ".join(str(r) for r in s.rules)
        for a, s in sorted(c.items())).replace("do *;", "do ~;")


# ---------------------------------------------------------------------------
# Formula evaluation

_UNKNOWN = object()


class FormulaEvaluator:
    """Bottom-up, demand-driven labeling of a formula over the reachable
    graph of a network.

    Knowledge accessibility always ranges over the full reachable state
    space: an observer cannot condition what it knows on strategies it does
    not see. Strategic nodes are evaluated per state by verification (with
    supplied strategies) or bounded synthesis.
    """

    def __init__(self, net: Network, mode: str = "verify",
                 supplied: Optional[dict[int, CollectiveStrategy]] = None,
                 strategies_by_name: Optional[dict[str, NaturalStrategy]] = None,
                 vocabulary: Optional[Sequence[GuardExpr]] = None,
                 synthesis: SynthesisConfig = SynthesisConfig(),
                 state_cap: int = DEFAULT_STATE_CAP):
        if mode not in ("verify", "synthesize"):
            raise DefinitionError(f"unknown mode {mode}")
        self.net = net
        self.mode = mode
        self.supplied = supplied or {}
        self.strategies_by_name = strategies_by_name or {}
        self.vocabulary = vocabulary
        self.synthesis = synthesis
        self.state_cap = state_cap
        self.graph = explore(net, state_cap=state_cap)
        self._classes: dict[str, dict] = {}
        self._memo: dict[tuple[int, int], object] = {}
        self.stats = CheckStats(states_explored=self.graph.n_states)
        self.last_witness: Optional[CheckResult] = None

    # -- helpers ------------------------------------------------------------
    def classes_for(self, agent: str) -> dict:
        if agent not in self._classes:
            self._classes[agent] = indistinguishability_classes(self.graph, agent)
        return self._classes[agent]

    def _strategy_for(self, node: Strategic) -> CollectiveStrategy:
        if id(node) in self.supplied:
            return self.supplied[id(node)]
        if node.witness:
            named = {}
            for agent, name in zip(node.coalition, node.witness):
                if name not in self.strategies_by_name:
                    raise DefinitionError(f"unknown strategy {name}")
                named[agent] = self.strategies_by_name[name]
            return named
        # otherwise: one supplied strategy set per coalition signature
        key = frozenset(node.coalition)
        for cand in self.supplied.values():
            if frozenset(cand) == key:
                return cand
        raise DefinitionError(
            f"verify mode: no strategy supplied for coalition {sorted(key)}")

    # -- evaluation -----------------------------------------------------------
    def holds(self, f: Formula, i: int):
        key = (id(f), i)
        if key in self._memo:
            return self._memo[key]
        val = self._eval(f, i)
        self._memo[key] = val
        return val

    def _eval(self, f: Formula, i: int):
        q = self.graph.states[i]
        if isinstance(f, FAtom):
            return eval_guard(f.guard, q, self.net)
        if isinstance(f, FNot):
            v = self.holds(f.sub, i)
            return _UNKNOWN if v is _UNKNOWN else (not v)
        if isinstance(f, FAnd):
            l = self.holds(f.left, i)
            if l is False:
                return False
            r = self.holds(f.right, i)
            if r is False:
                return False
            if l is _UNKNOWN or r is _UNKNOWN:
                return _UNKNOWN
            return True
        if isinstance(f, FOr):
            l = self.holds(f.left, i)
            if l is True:
                return True
            r = self.holds(f.right, i)
            if r is True:
                return True
            if l is _UNKNOWN or r is _UNKNOWN:
                return _UNKNOWN
            return False
        if isinstance(f, FImplies):
            l = self.holds(f.left, i)
            if l is False:
                return True
            r = self.holds(f.right, i)
            if r is True:
                return True
            if l is _UNKNOWN or r is _UNKNOWN:
                return _UNKNOWN
            return not (l and not r)
        if isinstance(f, Knows):
            state_set = self._label_set(f.sub)
            if state_set is _UNKNOWN:
                return _UNKNOWN
            return eval_knows(self.graph, f.agent, state_set, i,
                              classes=self.classes_for(f.agent))
        if isinstance(f, Strategic):
            return self._eval_strategic(f, i)
        raise TypeError(f"not a formula: {f!r}")

    def _label_set(self, f: Formula):
        out = set()
        for i in range(self.graph.n_states):
            v = self.holds(f, i)
            if v is _UNKNOWN:
                return _UNKNOWN
            if v:
                out.add(i)
        return out

    def _goal_predicates(self, node: Strategic):
        preds = []
        for sub in node.subs:
            labels = self._label_set(sub)
            if labels is _UNKNOWN:
                return _UNKNOWN
            index = self.graph._index  # states shared between full + outcome graphs
            def pred(state, labels=labels, index=index):
                j = index.get(state)
                return j is not None and j in labels
            preds.append(pred)
        return preds

    def _eval_strategic(self, node: Strategic, i: int):
        preds = self._goal_predicates(node)
        if preds is _UNKNOWN:
            return _UNKNOWN
        q = self.graph.states[i]
        if node.is_universal and node.bound == 0:
            res = verify_strategic(self.net, q, [], 0, node.op, preds, {},
                                   state_cap=self.state_cap)
            self.last_witness = res
            return res.verdict
        if self.mode == "verify" or node.witness:
            s_A = self._strategy_for(node)
            res = verify_strategic(self.net, q, node.coalition, node.bound,
                                   node.op, preds, s_A, state_cap=self.state_cap)
            self.last_witness = res
            return res.verdict
        try:
            res = synthesize_strategic(
                self.net, q, node.coalition, node.bound, node.op, preds,
                vocabulary=self.vocabulary, config=self.synthesis)
        except ResourceLimitError:
            return _UNKNOWN
        self.stats.strategies_enumerated += res.stats.strategies_enumerated
        self.last_witness = res
        return res.verdict


def eval_formula(net: Network, f: Formula, q: Optional[GlobalState] = None,
                 mode: str = "verify",
                 supplied: Optional[dict[int, CollectiveStrategy]] = None,
                 strategies_by_name: Optional[dict[str, NaturalStrategy]] = None,
                 vocabulary: Optional[Sequence[GuardExpr]] = None,
                 synthesis: SynthesisConfig = SynthesisConfig(),
                 state_cap: int = DEFAULT_STATE_CAP) -> CheckResult:
    """Evaluate a formula at state q (default: the initial state)."""
    t0 = time.perf_counter()
    ev = FormulaEvaluator(net, mode=mode, supplied=supplied,
                          strategies_by_name=strategies_by_name,
                          vocabulary=vocabulary, synthesis=synthesis,
                          state_cap=state_cap)
    q0 = net.initial_state() if q is None else q
    if q0 not in ev.graph:
        raise DefinitionError("state to check is not reachable from the initial state")
    v = ev.holds(f, ev.graph.index_of(q0))
    stats = CheckStats(states_explored=ev.graph.n_states,
                       strategies_enumerated=ev.stats.strategies_enumerated,
                       wall_time=time.perf_counter() - t0)
    verdict: Verdict = None if v is _UNKNOWN else bool(v)
    witness = ev.last_witness
    reason = "enumeration cap hit (unknown)" if verdict is None else ""
    if witness is not None and witness.reason:
        reason = witness.reason
    return CheckResult(
        verdict,
        witness_strategy=witness.witness_strategy if witness else None,
        witness_path=witness.witness_path if witness else (),
        reason=reason,
        stats=stats)
