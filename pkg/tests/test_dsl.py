import string

import pytest
from hypothesis import given, settings, strategies as st

from natstrat.dsl import (
    load_bundle, parse_bundle, parse_formula, parse_guard_text, parse_network,
    parse_strategy, print_formula, print_network, print_strategy,
)
from natstrat.errors import ParseError
from natstrat.formula import FAnd, FAtom, FNot, FOr, Knows, Strategic
from natstrat.model import LocAtom, Or, TrueConst
from natstrat.strategy import WILDCARD
from natstrat.casestudy import DATA_DIR


def test_minimal_network():
    net = parse_network("agent A { init only; }")
    assert len(net.agents) == 1
    assert net.agents[0].locations == ("only",)
    from natstrat.model import explore
    assert explore(net).n_states == 1


def test_voter_base_locations(base):
    tpl = base.network.agent("Voter")
    expected = {"printing", "has_ballot", "scanning", "voted", "check2_ok",
                "check2_fail", "out", "vote_ok", "shred", "check4",
                "check4_ok", "check4_fail", "end", "error", "check1"}
    assert expected <= set(tpl.locations)
    # `start` and `check3` complete the reconstruction
    assert {"start", "check3"} <= set(tpl.locations)
    assert tpl.lazy


def test_guard_disjunction_shape(base):
    g = parse_guard_text("check2_ok || check2_fail || out", base.network,
                         owner="Voter")
    # left-associative: Or(Or(a, b), c)
    assert isinstance(g, Or)
    assert isinstance(g.left, Or)
    assert isinstance(g.left.left, LocAtom) and g.left.left.location == "check2_ok"
    assert g.right.location == "out"


def test_strategy_rule_counts(base, full75):
    ns1 = base.strategies["cast_verify"]
    assert len(ns1.rules) == 9
    assert isinstance(ns1.rules[-1].guard, TrueConst)
    assert ns1.rules[-1].action is WILDCARD
    ns4 = full75.strategies["cast_verify_symbolwise"]
    assert len(ns4.rules) == 15


def test_single_rule_wait_strategy(base):
    s = parse_strategy("strategy idle for Voter { when true do wait; }",
                       base.network)
    assert len(s.rules) == 1 and s.is_total


def test_missing_final_true_rule(base):
    with pytest.raises(ParseError, match="final"):
        parse_strategy("strategy s for Voter { when has_ballot do scan_ballot; }",
                       base.network)


def test_partial_strategy_allowed(punisher):
    cs1 = punisher.strategies["punish_disobedient"]
    assert not cs1.is_total
    assert cs1.declared_partial
    assert len(cs1.rules) == 3


def test_partial_with_true_rule_round_trips(base):
    src = "partial strategy p for Voter { when true do scan_ballot; }"
    s = parse_strategy(src, base.network)
    assert s.declared_partial and not s.is_total
    again = parse_strategy(print_strategy(s), base.network)
    assert again.declared_partial and again.rules == s.rules


def test_unknown_action_rejected(base):
    with pytest.raises(ParseError, match="no action"):
        parse_strategy("strategy s for Voter { when true do fly; }", base.network)


def test_observability_rejects_other_agents_atoms(punisher):
    net = punisher.network
    with pytest.raises(ParseError, match="observable"):
        parse_strategy(
            "strategy s for Coercer { when Voter@voted do punish; when true do *; }",
            net)


def test_formula_strategic_shape(base):
    f = parse_formula("<<Voter>>^15 F end", base.network)
    assert isinstance(f, Strategic)
    assert f.coalition == ("Voter",) and f.bound == 15 and f.op == "F"
    assert isinstance(f.subs[0], FAtom)


def test_formula_universal_sugar(base):
    f = parse_formula("A G true", base.network)
    assert isinstance(f, Strategic)
    assert f.coalition == () and f.bound == 0 and f.op == "G"


def test_formula_until(base):
    f = parse_formula("<<Voter>>^3 (has_ballot U scanning)", base.network)
    assert f.op == "U" and len(f.subs) == 2


def test_formula_knows_and_receipt_freeness_shape(punisher):
    from natstrat.casestudy import receipt_freeness
    rf = receipt_freeness(4, net=punisher.network)
    assert isinstance(rf, FAnd)
    assert isinstance(rf.left, FNot) and isinstance(rf.left.sub, Strategic)
    node = rf.left.sub
    assert set(node.coalition) == {"Coercer", "Voter"}
    assert node.op == "G"
    # end -> (K voted_i or K not voted_i)
    impl = node.subs[0]
    assert isinstance(impl.right, FOr)
    assert isinstance(impl.right.left, Knows)


def test_formula_witness_annotation(base):
    f = base.formulas["dispute_resolution"]
    inner = f.subs[0].right
    assert isinstance(inner, Strategic)
    assert inner.witness == ("signal_on_dispute",)


def test_errors_carry_spans():
    try:
        parse_network("agent A { init a; edge a -> nowhere on go; }",
                      filename="bad.nsm")
    except ParseError as err:
        assert err.span is not None
        assert "bad.nsm" in str(err)
    else:
        pytest.fail("expected ParseError")


def test_semantic_errors():
    with pytest.raises(ParseError, match="undeclared variable"):
        parse_network("agent A { init a; loc b; edge a -> b on go when x == 1; }")
    with pytest.raises(ParseError, match="duplicate init"):
        parse_network("agent A { init a; init b; }")
    with pytest.raises(ParseError, match="undeclared channel"):
        parse_network("agent A { init a; loc b; edge a -> b on go sync c!; }")
    with pytest.raises(ParseError, match="constant"):
        parse_network("const k = 1; agent A { init a; loc b; "
                      "edge a -> b on go do k := 2; }")


def test_const_override():
    src = "const n = 7;\nagent A { var int[0,n] i = 0; init a; }"
    net = parse_network(src, consts={"n": 3})
    assert net.constant("n") == 3
    assert net.agent("A").local_vars[0].hi == 3


def test_include(tmp_path):
    (tmp_path / "net.nsm").write_text("agent A(lazy) { init a; }")
    main = tmp_path / "all.nss"
    main.write_text('include "net.nsm";\n'
                    "strategy s for A { when true do wait; }\n")
    bundle = load_bundle(main)
    assert bundle.network is not None
    assert "s" in bundle.strategies


def test_circular_include_rejected(tmp_path):
    a = tmp_path / "a.nsm"
    b = tmp_path / "b.nsm"
    a.write_text(f'include "{b.name}";')
    b.write_text(f'include "{a.name}";')
    with pytest.raises(ParseError, match="circular"):
        load_bundle(a)


# -- round trips ---------------------------------------------------------------

@pytest.mark.parametrize("stem", [
    "voter_base", "voter_check4", "voter_full", "coercion_punisher",
    "coercion_infector", "coercion_watchdog", "infrastructure"])
def test_network_round_trip(stem):
    net = load_bundle(DATA_DIR / f"{stem}.nsm").network
    again = parse_network(print_network(net), name=net.name)
    assert again == net


@pytest.mark.parametrize("stem", [
    "voter_base", "voter_check4", "voter_full", "coercion_punisher",
    "coercion_infector", "coercion_watchdog"])
def test_strategy_round_trip(stem):
    bundle = load_bundle(DATA_DIR / f"{stem}.nsm")
    nss = (DATA_DIR / f"{stem}.nss")
    if not nss.exists():
        pytest.skip("no strategies bundled")
    strategies = load_bundle(nss, net=bundle.network).strategies
    for s in strategies.values():
        again = parse_strategy(print_strategy(s), bundle.network)
        assert again.rules == s.rules
        assert again.agent == s.agent
        assert again.declared_partial == s.declared_partial


@pytest.mark.parametrize("stem", ["voter_base", "voter_check4", "voter_full",
                                  "coercion_punisher"])
def test_formula_round_trip(stem):
    bundle = load_bundle(DATA_DIR / f"{stem}.nsm")
    nsq = DATA_DIR / f"{stem}.nsq"
    if not nsq.exists():
        pytest.skip("no formulas bundled")
    formulas = load_bundle(nsq, net=bundle.network).formulas
    for f in formulas.values():
        again = parse_formula(print_formula(f), bundle.network)
        assert again == f


# random formulas over the toy net round-trip too
def _formula_atoms(net):
    return st.sampled_from([
        FAtom(parse_guard_text("l0", net)),
        FAtom(parse_guard_text("U@u1", net)),
        FAtom(parse_guard_text("shared", net)),
        FAtom(parse_guard_text("x == 2", net)),
        FAtom(parse_guard_text("true", net)),
    ])


def _formulas(net):
    from natstrat.formula import FImplies
    return st.recursive(
        _formula_atoms(net),
        lambda kids: st.one_of(
            kids.map(FNot),
            st.tuples(kids, kids).map(lambda p: FAnd(*p)),
            st.tuples(kids, kids).map(lambda p: FOr(*p)),
            st.tuples(kids, kids).map(lambda p: FImplies(*p)),
            kids.map(lambda s: Knows("U", s)),
            kids.map(lambda s: Strategic(("T",), 3, "F", (s,))),
            kids.map(lambda s: Strategic((), 0, "G", (s,))),
            st.tuples(kids, kids).map(
                lambda p: Strategic(("T", "U"), 5, "U", p)),
        ),
        max_leaves=6)


@settings(max_examples=120, deadline=None)
@given(data=st.data())
def test_random_formula_round_trip(toy_net, data):
    f = data.draw(_formulas(toy_net))
    assert parse_formula(print_formula(f), toy_net) == f


# -- totality fuzz ---------------------------------------------------------------

_soup_tokens = st.sampled_from(
    ["agent", "init", "loc", "edge", "on", "when", "do", "sync", "strategy",
     "formula", "const", "global", "int", "{", "}", "(", ")", "[", "]", ";",
     ",", "->", ":=", "==", "&&", "||", "!", "<<", ">>", "^", "*", "future",
     "A", "F", "G", "K", "x", "0", "7", "@", "?", "true"])


@settings(max_examples=150, deadline=None)
@given(st.one_of(
    st.text(alphabet=string.printable, max_size=120),
    st.lists(_soup_tokens, max_size=40).map(" ".join)))
def test_parsing_is_total(text):
    try:
        parse_bundle(text)
    except ParseError:
        pass  # rejected with a span; that's the contract
