import pytest
from hypothesis import given, settings, strategies as st

from natstrat.checker import (
    check_temporal_universal, eval_formula, verify_strategic,
)
from natstrat.dsl import parse_formula, parse_guard_text, parse_network
from natstrat.errors import DefinitionError
from natstrat.model import eval_guard
from natstrat.outcome import outcomes


# -- direct spec examples --------------------------------------------------------

def test_ag_true_everywhere(base):
    og = outcomes(base.network, None, {})
    assert check_temporal_universal(og, "G", [set(range(og.n_states))]).verdict


def test_af_end_on_fixed_model(base):
    from natstrat.strategy import fix_strategy
    fixed = fix_strategy(base.network, {"Voter": base.strategies["cast_verify"]})
    og = outcomes(fixed, None, {})
    end = og.satisfying(parse_guard_text("end", fixed))
    assert check_temporal_universal(og, "F", [end]).verdict is True


def test_af_error_false_with_counterexample(base):
    net = base.network
    og = outcomes(net, None, {"Voter": base.strategies["cast_verify"]})
    err = og.satisfying(parse_guard_text("error", net))
    res = check_temporal_universal(og, "F", [err])
    assert res.verdict is False
    assert res.witness_path
    assert all(i not in err for i in res.witness_path)


def test_verify_strategic_table(base, check4, full75):
    def run(bundle, sname, bound, goal_text):
        net = bundle.network
        goal = parse_guard_text(goal_text, net)
        s = bundle.strategies[sname]
        return verify_strategic(net, None, [s.agent], bound, "F",
                                [lambda q: eval_guard(goal, q, net)],
                                {s.agent: s}).verdict

    assert run(base, "cast_verify", 15, "end") is True
    assert run(base, "cast_verify", 14, "end") is False
    assert run(base, "cast_verify_extra_checks", 21,
               "checked1 && checked3 && end") is True
    assert run(check4, "cast_verify_split_check4", 17,
               "checked4 && checked4_1 && checked4_2") is True
    assert run(full75, "cast_verify_symbolwise", 29,
               "checked4 && wbb_checked_sn && receipt_checked_sn && checked4_1 "
               "&& wbb_checked_pr && receipt_checked_pr && checked4_2") is True


def test_verify_psi_without_finish_rule(base):
    net = base.network
    s = base.strategies["cast_verify"].without_rule(8)
    goal = parse_guard_text("check4_ok || check4_fail", net)
    res = verify_strategic(net, None, ["Voter"], 12, "F",
                           [lambda q: eval_guard(goal, q, net)], {"Voter": s})
    assert res.verdict is True
    assert verify_strategic(net, None, ["Voter"], 11, "F",
                            [lambda q: eval_guard(goal, q, net)],
                            {"Voter": s}).verdict is False


def test_k_monotonicity_verify(base):
    net = base.network
    goal = parse_guard_text("end", net)
    s = base.strategies["cast_verify"]
    verdicts = [verify_strategic(net, None, ["Voter"], k, "F",
                                 [lambda q: eval_guard(goal, q, net)],
                                 {"Voter": s}).verdict
                for k in range(10, 22)]
    assert verdicts == [False] * 5 + [True] * 7


def test_coalition_strategy_mismatch(base):
    s = base.strategies["cast_verify"]
    with pytest.raises(DefinitionError):
        verify_strategic(base.network, None, ["Voter", "Ghost"], 15, "F",
                         [lambda q: True], {"Voter": s})


def test_universal_quantifier_identity(base):
    """<<>>^0 gamma coincides with the universal check on the unpruned graph."""
    net = base.network
    og = outcomes(net, None, {})
    for goal_text in ("end", "error", "has_ballot", "true"):
        goal = parse_guard_text(goal_text, net)
        goal_set = og.satisfying(goal)
        direct = check_temporal_universal(og, "F", [goal_set]).verdict
        via_formula = eval_formula(net, parse_formula(f"A F {goal_text}", net))
        assert via_formula.verdict == direct


def test_dispute_resolution(base):
    res = eval_formula(base.network, base.formulas["dispute_resolution"],
                       strategies_by_name=base.strategies)
    assert res.verdict is True


def test_atom_at_own_state(base):
    res = eval_formula(base.network, parse_formula("start", base.network))
    assert res.verdict is True
    res2 = eval_formula(base.network, parse_formula("end", base.network))
    assert res2.verdict is False


def test_ax_and_au(base):
    net = base.network
    og = outcomes(net, None, {})
    printing = og.satisfying(parse_guard_text("printing", net))
    start_or_printing = og.satisfying(parse_guard_text("start || printing", net))
    # from start, the only productive move is enter -> printing
    assert check_temporal_universal(og, "X", [printing]).verdict is True
    assert check_temporal_universal(og, "U", [start_or_printing, printing]).verdict


# -- random-graph oracle ----------------------------------------------------------

def _automaton(n, edges):
    lines = [f"agent G {{ init s0;"]
    lines += [f"loc s{i};" for i in range(1, n)]
    for k, (a, b) in enumerate(edges):
        lines.append(f"edge s{a} -> s{b} on e{k};")
    lines.append("}")
    return parse_network(" ".join(lines), name="rand")


def _adjacency(og):
    return {i: sorted(og.successors(i)) for i in range(og.n_states)}


def _af_oracle_paths(succ, start, goal):
    """Naive: enumerate maximal paths, truncating at the first revisit."""
    def ok(u, onpath):
        if u in goal:
            return True
        if u in onpath or not succ[u]:
            return False
        return all(ok(v, onpath | {u}) for v in succ[u])
    return ok(start, frozenset())


def _au_oracle_paths(succ, start, hold, until):
    def ok(u, onpath):
        if u in until:
            return True
        if u not in hold or u in onpath or not succ[u]:
            return False
        return all(ok(v, onpath | {u}) for v in succ[u])
    return ok(start, frozenset())


def _ag_oracle(succ, start, safe):
    seen, stack = {start}, [start]
    while stack:
        u = stack.pop()
        if u not in safe:
            return False
        for v in succ[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return True


def _au_oracle_witness(succ, start, hold, until):
    """A(hold U until) fails iff, staying in hold-minus-until, the start can
    reach a state outside hold, a terminal, or a cycle."""
    region, stack = set(), [start]
    while stack:
        u = stack.pop()
        if u in until or u in region:
            continue
        if u not in hold:
            return False
        region.add(u)
        if not succ[u]:
            return False
        stack.extend(succ[u])
    color = {}
    for root in region:
        if root in color:
            continue
        dfs = [(root, iter([v for v in succ[root] if v in region]))]
        color[root] = 1
        while dfs:
            node, it = dfs[-1]
            adv = next(it, None)
            if adv is None:
                color[node] = 2
                dfs.pop()
            elif color.get(adv, 0) == 1:
                return False
            elif adv not in color:
                color[adv] = 1
                dfs.append((adv, iter([v for v in succ[adv] if v in region])))
    return True


def _af_oracle_witness(succ, start, goal):
    """Independent route for larger graphs: AF fails iff the goal-avoiding
    region reachable from start contains a terminal or a cycle."""
    if start in goal:
        return True
    region, stack = {start}, [start]
    while stack:
        u = stack.pop()
        for v in succ[u]:
            if v not in goal and v not in region:
                region.add(v)
                stack.append(v)
    for u in region:
        if not succ[u]:
            return False
    color = {}
    for root in region:
        if root in color:
            continue
        dfs = [(root, iter([v for v in succ[root] if v in region]))]
        color[root] = 1
        while dfs:
            node, it = dfs[-1]
            adv = next(it, None)
            if adv is None:
                color[node] = 2
                dfs.pop()
            elif color.get(adv, 0) == 1:
                return False
            elif adv not in color:
                color[adv] = 1
                dfs.append((adv, iter([v for v in succ[adv] if v in region])))
    return True


@st.composite
def _small_graph(draw):
    n = draw(st.integers(1, 12))
    n_edges = draw(st.integers(0, min(2 * n, 18)))
    edges = [(draw(st.integers(0, n - 1)), draw(st.integers(0, n - 1)))
             for _ in range(n_edges)]
    labels = frozenset(i for i in range(n) if draw(st.booleans()))
    labels2 = frozenset(i for i in range(n) if draw(st.booleans()))
    return n, edges, labels, labels2


@settings(max_examples=120, deadline=None)
@given(case=_small_graph())
def test_temporal_matches_path_enumeration(case):
    n, edges, labels, labels2 = case
    net = _automaton(n, edges)
    og = outcomes(net, None, {})
    # hypothesis labels index locations; map to reachable state indices
    goal = {i for i in range(og.n_states)
            if int(og.state(i).locations[0][1:]) in labels}
    hold = {i for i in range(og.n_states)
            if int(og.state(i).locations[0][1:]) in labels2}
    succ = _adjacency(og)
    assert check_temporal_universal(og, "F", [goal]).verdict == \
        _af_oracle_paths(succ, og.initial, goal)
    assert check_temporal_universal(og, "G", [goal]).verdict == \
        _ag_oracle(succ, og.initial, goal)
    assert check_temporal_universal(og, "U", [hold, goal]).verdict == \
        _au_oracle_paths(succ, og.initial, hold, goal)


@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_temporal_matches_witness_search_large(data):
    n = data.draw(st.integers(2, 200))
    n_edges = data.draw(st.integers(1, min(2 * n, 260)))
    edges = [(data.draw(st.integers(0, n - 1)), data.draw(st.integers(0, n - 1)))
             for _ in range(n_edges)]
    goal_locs = data.draw(st.sets(st.integers(0, n - 1), max_size=max(1, n // 4)))
    net = _automaton(n, edges)
    og = outcomes(net, None, {})
    goal = {i for i in range(og.n_states)
            if int(og.state(i).locations[0][1:]) in goal_locs}
    succ = _adjacency(og)
    assert check_temporal_universal(og, "F", [goal]).verdict == \
        _af_oracle_witness(succ, og.initial, goal)
    assert check_temporal_universal(og, "G", [goal]).verdict == \
        _ag_oracle(succ, og.initial, goal)
