"""Outcome graphs of collective strategies and the worst-case step metric.

The outcome of a collective strategy from a state is the reachable graph in
which every coalition member only takes actions its strategy prescribes
(first-match semantics), while all other agents behave freely.

`wait` self-loops are idle transitions: path-level analyses run under a weak
fairness assumption (no agent idles forever while a productive move is
enabled), which is realized by ignoring idle self-loops and treating states
with no productive move as terminal. Idle transitions never count toward
step totals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .model import (
    DEFAULT_STATE_CAP, GlobalState, GuardExpr, Internal, Move, Network,
    StateGraph, Transition, explore,
)
from .strategy import CollectiveStrategy, allowed_actions


@dataclass
class OutcomeGraph:
    """Reachable graph of out(q, s_A), with transitions tagged by the acting
    agent(s) and whether a coalition member acts.

    Maximal traces are the infinite paths plus the finite ones ending in a
    state with no productive (non-idle) move.
    """

    net: Network
    coalition: frozenset[str]
    strategies: CollectiveStrategy
    graph: StateGraph

    def __post_init__(self):
        self._nonidle: list[list[Transition]] = [
            [t for t in self.graph.out_edges(i) if not t.move.is_idle]
            for i in range(self.graph.n_states)
        ]

    @property
    def n_states(self) -> int:
        return self.graph.n_states

    @property
    def initial(self) -> int:
        return self.graph.initial

    def state(self, i: int) -> GlobalState:
        return self.graph.states[i]

    def out_edges(self, i: int) -> list[Transition]:
        """Productive transitions from state i (idle self-loops dropped)."""
        return self._nonidle[i]

    def successors(self, i: int) -> set[int]:
        return {t.target for t in self._nonidle[i]}

    def is_terminal(self, i: int) -> bool:
        return not self._nonidle[i]

    def satisfying(self, guard: GuardExpr) -> set[int]:
        return self.graph.satisfying(guard)

    def coalition_acts(self, t: Transition) -> bool:
        return any(a in self.coalition for a in t.move.actors)


def outcomes(net: Network, q: Optional[GlobalState], s_A: CollectiveStrategy,
             state_cap: int = DEFAULT_STATE_CAP) -> OutcomeGraph:
    """Build out(q, s_A) directly: at every state each coalition agent is
    restricted to its matched rule's action (every available action under the
    wildcard, nothing when a partial strategy has no matching rule)."""
    coalition = frozenset(s_A)
    for agent in coalition:
        net.agent(agent)
    allowed_cache: dict[tuple[str, GlobalState], set[str]] = {}

    def allowed(agent: str, state: GlobalState) -> set[str]:
        key = (agent, state)
        got = allowed_cache.get(key)
        if got is None:
            got = allowed_actions(net, state, s_A[agent])
            allowed_cache[key] = got
        return got

    def move_filter(state: GlobalState, move: Move) -> bool:
        if isinstance(move, Internal):
            if move.agent in coalition:
                return move.edge.action in allowed(move.agent, state)
            return True
        ok = True
        if move.sender in coalition:
            ok = move.send_edge.action in allowed(move.sender, state)
        if ok and move.receiver in coalition:
            ok = move.recv_edge.action in allowed(move.receiver, state)
        return ok

    graph = explore(net, start=q, state_cap=state_cap,
                    move_filter=move_filter if coalition else None)
    return OutcomeGraph(net=net, coalition=coalition, strategies=dict(s_A),
                        graph=graph)


# ---------------------------------------------------------------------------
# Worst-case steps to a goal

@dataclass
class StepsResult:
    kind: str                      # 'reached' | 'unreachable' | 'unbounded'
    value: Optional[int] = None    # worst-case first-occurrence index
    witness: tuple[int, ...] = ()  # state-index path (lasso: cycle appended)
    lasso_start: Optional[int] = None

    @property
    def reached(self) -> bool:
        return self.kind == "reached"

    def __str__(self):
        if self.kind == "reached":
            return str(self.value)
        return self.kind


def _absorbing_region(og: OutcomeGraph, goal: set[int]) -> tuple[set[int], dict[int, list[int]]]:
    """States reachable from the start before-or-at the first goal visit;
    goal states are absorbing sinks. Successors restricted to the region."""
    region = {og.initial}
    succ: dict[int, list[int]] = {}
    stack = [og.initial]
    while stack:
        i = stack.pop()
        if i in goal:
            succ[i] = []
            continue
        outs = sorted(og.successors(i))
        succ[i] = outs
        for j in outs:
            if j not in region:
                region.add(j)
                stack.append(j)
    return region, succ


def _path_to(succ: dict[int, list[int]], start: int, targets: set[int]) -> tuple[int, ...]:
    from collections import deque
    prev: dict[int, int] = {start: start}
    dq = deque([start])
    while dq:
        i = dq.popleft()
        if i in targets:
            path = [i]
            while path[-1] != start:
                path.append(prev[path[-1]])
            return tuple(reversed(path))
        for j in succ.get(i, ()):
            if j not in prev:
                prev[j] = i
                dq.append(j)
    return ()


def steps_to_goal(net: Network, q: Optional[GlobalState], s_A: CollectiveStrategy,
                  goal: GuardExpr, state_cap: int = DEFAULT_STATE_CAP) -> StepsResult:
    """Worst case, over all maximal traces of out(q, s_A), of the index of the
    first goal state; 0 when the goal already holds at q. Counts every
    productive transition of the interleaved run; idle `wait` loops are
    excluded via the fairness convention.

    'unreachable': some maximal trace never visits the goal and cannot anymore
    (a trapped or terminal region). 'unbounded': every trace can still reach
    the goal but a pre-goal cycle makes the worst case infinite.
    """
    og = outcomes(net, q, s_A, state_cap=state_cap)
    goal = goal  # GuardExpr
    goal_set = og.satisfying(goal)
    if og.initial in goal_set:
        return StepsResult("reached", 0, witness=(og.initial,))

    region, succ = _absorbing_region(og, goal_set)
    region_goals = region & goal_set

    # Backward reachability of the goal inside the absorbed region.
    preds: dict[int, list[int]] = {i: [] for i in region}
    for i, outs in succ.items():
        for j in outs:
            preds[j].append(i)
    can_reach = set(region_goals)
    stack = list(region_goals)
    while stack:
        j = stack.pop()
        for i in preds[j]:
            if i not in can_reach:
                can_reach.add(i)
                stack.append(i)

    dead = region - can_reach
    if dead:
        return StepsResult("unreachable", witness=_path_to(succ, og.initial, dead))

    # Cycle check within the pre-goal region (goal states are sinks).
    color: dict[int, int] = {}
    cycle_node: Optional[int] = None
    for root in region:
        if color.get(root):
            continue
        stack2: list[tuple[int, int]] = [(root, 0)]
        color[root] = 1
        while stack2 and cycle_node is None:
            node, idx = stack2[-1]
            outs = succ[node]
            if idx < len(outs):
                stack2[-1] = (node, idx + 1)
                nxt = outs[idx]
                c = color.get(nxt, 0)
                if c == 0:
                    color[nxt] = 1
                    stack2.append((nxt, 0))
                elif c == 1:
                    cycle_node = nxt
            else:
                color[node] = 2
                stack2.pop()
        if cycle_node is not None:
            break
    if cycle_node is not None:
        path = _path_to(succ, og.initial, {cycle_node})
        loop = _path_to(succ, cycle_node, {cycle_node}) or (cycle_node,)
        return StepsResult("unbounded", witness=path + loop[1:],
                           lasso_start=len(path) - 1)

    # Acyclic pre-goal region: longest path to a goal state.
    order: list[int] = []
    mark: set[int] = set()
    def topo(node: int):
        stack3 = [(node, 0)]
        while stack3:
            n, idx = stack3[-1]
            if idx == 0 and n in mark:
                stack3.pop()
                continue
            mark.add(n)
            outs = succ[n]
            if idx < len(outs):
                stack3[-1] = (n, idx + 1)
                nxt = outs[idx]
                if nxt not in mark:
                    stack3.append((nxt, 0))
            else:
                order.append(n)
                stack3.pop()
    topo(og.initial)
    order.reverse()
    dist = {og.initial: 0}
    parent: dict[int, int] = {}
    for i in order:
        if i not in dist or i in goal_set:
            continue
        for j in succ[i]:
            if dist[i] + 1 > dist.get(j, -1):
                dist[j] = dist[i] + 1
                parent[j] = i
    worst = max(region_goals, key=lambda g: dist.get(g, -1))
    path = [worst]
    while path[-1] != og.initial:
        path.append(parent[path[-1]])
    return StepsResult("reached", dist[worst], witness=tuple(reversed(path)))
