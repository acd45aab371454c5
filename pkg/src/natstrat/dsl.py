"""Text formats and parsers.

Three UTF-8 formats share one lexer and may live in one file:

* networks (``.nsm``): constants, channels, global variables, agent blocks;
* strategies (``.nss``): ordered ``when <guard> do <action>;`` rules;
* formulas (``.nsq``): strategic/temporal/epistemic queries.

Guard and update expressions are C-like (&&, ||, !, ==, !=, <, <=, >, >=).
See docs/dsl.md for the full grammar. Parsing is total: any input either
yields a bundle or raises ParseError with a source span.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .errors import DefinitionError, ParseError
from .formula import (
    FAnd, FAtom, FImplies, FNot, FOr, Formula, Knows, Strategic,
)
from .model import (
    And, AgentTemplate, Assignment, Comparison, Edge, FalseConst,
    GuardExpr, IntBin, IntExpr, IntLit, IntVar, LocAtom, Network, Not, Or,
    TrueConst, VarAtom, VarDecl, VarRef,
)
from .strategy import WILDCARD, NaturalStrategy, Rule


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    end_line: int = 0
    end_column: int = 0

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"


@dataclass
class ParsedBundle:
    """Everything one source (plus includes) declares, fully resolved."""

    network: Optional[Network]
    strategies: dict[str, NaturalStrategy] = field(default_factory=dict)
    formulas: dict[str, Formula] = field(default_factory=dict)
    spans: dict[int, SourceSpan] = field(default_factory=dict)

    def span_of(self, node) -> Optional[SourceSpan]:
        return self.spans.get(id(node))


# ---------------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>//[^\n]*)
  | (?P<nl>\n)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
  | (?P<op><<|>>|->|:=|==|!=|<=|>=|&&|\|\||[{}()\[\];,@!<>=^*?:+\-.])
""", re.VERBOSE)

_KEYWORDS = {
    "const", "channel", "global", "agent", "var", "int", "init", "loc",
    "edge", "on", "when", "sync", "do", "strategy", "partial", "for",
    "formula", "true", "false", "include",
}


@dataclass(frozen=True)
class Token:
    kind: str  # 'int' | 'ident' | 'string' | 'op' | 'eof' or a keyword
    text: str
    line: int
    column: int


def _tokenize(text: str, filename: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"illegal character {text[pos]!r}",
                             SourceSpan(filename, line, col))
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(value)
        else:
            if kind == "ident" and value in _KEYWORDS:
                kind = value
            tokens.append(Token(kind, value, line, col))
            col += len(value)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Raw (pre-resolution) parse structures

@dataclass(frozen=True)
class _RawName:
    name: str
    agent: Optional[str] = None  # Agent@name form when set


@dataclass
class _RawEdge:
    source: str
    target: str
    action: str
    guard: object  # raw guard tree
    sync: Optional[tuple[str, str]]
    updates: list[tuple[str, object]]  # (target name, raw int expr)
    span: SourceSpan


@dataclass
class _RawAgent:
    name: str
    lazy: bool
    locations: list[tuple[str, list[str], SourceSpan]]  # (name, labels, span)
    initial: Optional[str]
    variables: list[tuple[VarDecl, SourceSpan]]
    raw_var_bounds: list[tuple[str, object, object, int, SourceSpan]]
    edges: list[_RawEdge]
    span: SourceSpan
    auto_locs: set[str] = field(default_factory=set)


# ---------------------------------------------------------------------------
# Parser

class _Parser:
    def __init__(self, tokens: list[Token], filename: str):
        self.tokens = tokens
        self.filename = filename
        self.pos = 0

    # -- token plumbing ------------------------------------------------------
    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def span(self, tok: Optional[Token] = None) -> SourceSpan:
        tok = tok or self.peek()
        return SourceSpan(self.filename, tok.line, tok.column)

    def fail(self, expected: str) -> ParseError:
        tok = self.peek()
        got = tok.text or "end of input"
        return ParseError(f"expected {expected}, got {got!r}", self.span(tok))

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        if not self.at(kind, text):
            raise self.fail(text or kind)
        return self.advance()

    def expect_op(self, op: str) -> Token:
        if not (self.peek().kind == "op" and self.peek().text == op):
            raise self.fail(f"'{op}'")
        return self.advance()

    def at_op(self, op: str) -> bool:
        return self.peek().kind == "op" and self.peek().text == op

    def ident(self, what: str = "identifier") -> str:
        if not self.at("ident"):
            raise self.fail(what)
        return self.advance().text

    def integer(self) -> int:
        neg = False
        if self.at_op("-"):
            self.advance()
            neg = True
        tok = self.expect("int")
        v = int(tok.text)
        return -v if neg else v

    # -- guards (raw) ---------------------------------------------------------
    def parse_guard(self):
        return self._g_or()

    def _g_or(self):
        left = self._g_and()
        while self.at_op("||"):
            self.advance()
            left = ("or", left, self._g_and())
        return left

    def _g_and(self):
        left = self._g_unary()
        while self.at_op("&&"):
            self.advance()
            left = ("and", left, self._g_unary())
        return left

    def _g_unary(self):
        if self.at_op("!"):
            self.advance()
            return ("not", self._g_unary())
        if self.at_op("("):
            self.advance()
            g = self._g_or()
            self.expect_op(")")
            return g
        if self.at("true"):
            self.advance()
            return ("true",)
        if self.at("false"):
            self.advance()
            return ("false",)
        return self._g_atom()

    def _g_atom(self):
        tok = self.peek()
        name = self.ident("guard atom")
        agent = None
        if self.at_op("@"):
            self.advance()
            agent, name = name, self.ident("location name")
        if self.peek().kind == "op" and self.peek().text in ("==", "!=", "<", "<=", ">", ">="):
            if agent is not None:
                raise ParseError("comparisons apply to variables, not locations",
                                 self.span(tok))
            op = self.advance().text
            if self.at("int") or self.at_op("-"):
                rhs: object = self.integer()
            else:
                rhs = _RawName(self.ident("variable, constant or integer"))
            return ("cmp", _RawName(name), op, rhs, self.span(tok))
        return ("atom", _RawName(name, agent), self.span(tok))

    # -- integer expressions (raw) --------------------------------------------
    def parse_int_expr(self):
        left = self._i_term()
        while self.peek().kind == "op" and self.peek().text in ("+", "-"):
            op = self.advance().text
            left = ("bin", op, left, self._i_term())
        return left

    def _i_term(self):
        if self.at("int"):
            return ("lit", int(self.advance().text))
        tok = self.peek()
        return ("var", _RawName(self.ident("integer term")), self.span(tok))


# ---------------------------------------------------------------------------
# Bundle parsing

class _BundleParser(_Parser):
    def __init__(self, tokens, filename, consts_override=None, include_stack=None):
        super().__init__(tokens, filename)
        self.consts_override = dict(consts_override or {})
        self.include_stack = include_stack or []
        self.constants: dict[str, int] = {}
        self.channels: list[tuple[str, SourceSpan]] = []
        self.globals: list[tuple[str, object, object, int, SourceSpan]] = []
        self.agents: list[_RawAgent] = []
        self.raw_strategies: list[dict] = []
        self.raw_formulas: list[dict] = []

    def parse_items(self):
        while not self.at("eof"):
            if self.at("const"):
                self._item_const()
            elif self.at("channel"):
                self._item_channel()
            elif self.at("global"):
                self._item_global()
            elif self.at("agent"):
                self._item_agent()
            elif self.at("partial") or self.at("strategy"):
                self._item_strategy()
            elif self.at("formula"):
                self._item_formula()
            elif self.at("include"):
                self._item_include()
            else:
                raise self.fail("a declaration (const/channel/global/agent/"
                                "strategy/formula/include)")

    def _item_const(self):
        self.advance()
        name = self.ident("constant name")
        self.expect_op("=")
        value = self.integer()
        self.expect_op(";")
        self.constants[name] = self.consts_override.get(name, value)

    def _item_channel(self):
        self.advance()
        tok = self.peek()
        name = self.ident("channel name")
        self.channels.append((name, self.span(tok)))
        self.expect_op(";")

    def _vardecl_tail(self):
        """after 'int': [lo,hi] name = init ;  (bounds may be constants)"""
        self.expect("int")
        self.expect_op("[")
        lo = self._bound()
        self.expect_op(",")
        hi = self._bound()
        self.expect_op("]")
        tok = self.peek()
        name = self.ident("variable name")
        self.expect_op("=")
        init = self.integer()
        self.expect_op(";")
        return name, lo, hi, init, self.span(tok)

    def _bound(self):
        if self.at("int") or self.at_op("-"):
            return self.integer()
        return _RawName(self.ident("bound (integer or constant)"))

    def _item_global(self):
        self.advance()
        self.globals.append(self._vardecl_tail())

    def _item_agent(self):
        self.advance()
        tok = self.peek()
        name = self.ident("agent name")
        lazy = False
        if self.at_op("("):
            self.advance()
            flag = self.ident("'lazy'")
            if flag != "lazy":
                raise ParseError(f"unknown agent flag {flag!r}", self.span(tok))
            lazy = True
            self.expect_op(")")
        self.expect_op("{")
        agent = _RawAgent(name=name, lazy=lazy, locations=[], initial=None,
                          variables=[], raw_var_bounds=[], edges=[],
                          span=self.span(tok))
        while not self.at_op("}"):
            if self.at("var"):
                self.advance()
                agent.raw_var_bounds.append(self._vardecl_tail())
            elif self.at("init"):
                itok = self.peek()
                self.advance()
                loc = self.ident("location name")
                self.expect_op(";")
                if agent.initial is not None:
                    raise ParseError(f"agent {name}: duplicate init", self.span(itok))
                agent.initial = loc
                if loc not in [l for l, _, _ in agent.locations]:
                    agent.locations.append((loc, [], self.span(itok)))
                    agent.auto_locs.add(loc)
            elif self.at("loc"):
                ltok = self.peek()
                self.advance()
                loc = self.ident("location name")
                labels: list[str] = []
                if self.at_op("["):
                    self.advance()
                    labels.append(self.ident("atom label"))
                    while self.at_op(","):
                        self.advance()
                        labels.append(self.ident("atom label"))
                    self.expect_op("]")
                self.expect_op(";")
                existing = [l for l, _, _ in agent.locations]
                if loc in existing:
                    if loc in agent.auto_locs:
                        # `init` auto-declared it; a real decl refines labels
                        agent.auto_locs.discard(loc)
                        idx = existing.index(loc)
                        agent.locations[idx] = (loc, labels, self.span(ltok))
                    else:
                        raise ParseError(f"agent {name}: duplicate location {loc}",
                                         self.span(ltok))
                else:
                    agent.locations.append((loc, labels, self.span(ltok)))
            elif self.at("edge"):
                agent.edges.append(self._agent_edge())
            else:
                raise self.fail("var/init/loc/edge or '}'")
        self.expect_op("}")
        if agent.initial is None:
            raise ParseError(f"agent {name}: missing init", agent.span)
        self.agents.append(agent)

    def _agent_edge(self) -> _RawEdge:
        tok = self.peek()
        self.advance()  # 'edge'
        source = self.ident("source location")
        self.expect_op("->")
        target = self.ident("target location")
        self.expect("on")
        action = self.ident("action label")
        guard: object = ("true",)
        sync = None
        updates: list[tuple[str, object]] = []
        if self.at("when"):
            self.advance()
            guard = self.parse_guard()
        if self.at("sync"):
            self.advance()
            chan = self.ident("channel name")
            if self.at_op("!"):
                self.advance()
                sync = (chan, "!")
            elif self.at_op("?"):
                self.advance()
                sync = (chan, "?")
            else:
                raise self.fail("'!' or '?'")
        if self.at("do"):
            self.advance()
            updates.append(self._assignment())
            while self.at_op(","):
                self.advance()
                updates.append(self._assignment())
        self.expect_op(";")
        return _RawEdge(source, target, action, guard, sync, updates, self.span(tok))

    def _assignment(self):
        name = self.ident("assignment target")
        self.expect_op(":=")
        return (name, self.parse_int_expr())

    def _item_strategy(self):
        partial = False
        tok = self.peek()
        if self.at("partial"):
            partial = True
            self.advance()
        self.expect("strategy")
        name = self.ident("strategy name")
        self.expect("for")
        agent = self.ident("agent name")
        self.expect_op("{")
        rules = []
        while not self.at_op("}"):
            rtok = self.peek()
            self.expect("when")
            guard = self.parse_guard()
            self.expect("do")
            if self.at_op("*"):
                self.advance()
                action: object = WILDCARD
            else:
                action = self.ident("action label or '*'")
            self.expect_op(";")
            rules.append((guard, action, self.span(rtok)))
        self.expect_op("}")
        self.raw_strategies.append(dict(name=name, agent=agent, partial=partial,
                                        rules=rules, span=self.span(tok)))

    def _item_formula(self):
        tok = self.peek()
        self.advance()
        name = self.ident("formula name")
        self.expect_op("=")
        tree = self._formula()
        self.expect_op(";")
        self.raw_formulas.append(dict(name=name, tree=tree, span=self.span(tok)))

    def _item_include(self):
        tok = self.peek()
        self.advance()
        path_tok = self.expect("string")
        self.expect_op(";")
        rel = path_tok.text.strip('"')
        base = Path(self.filename).parent if self.filename != "<string>" else Path(".")
        target = (base / rel).resolve()
        if str(target) in self.include_stack:
            raise ParseError(f"circular include of {rel}", self.span(tok))
        try:
            text = target.read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseError(f"cannot include {rel}: {exc}", self.span(tok))
        sub = _BundleParser(_tokenize(text, str(target)), str(target),
                            self.consts_override,
                            self.include_stack + [str(target)])
        sub.parse_items()
        self._merge(sub)

    def _merge(self, sub: "_BundleParser"):
        for k, v in sub.constants.items():
            self.constants.setdefault(k, v)
        self.channels.extend(sub.channels)
        self.globals.extend(sub.globals)
        self.agents.extend(sub.agents)
        self.raw_strategies.extend(sub.raw_strategies)
        self.raw_formulas.extend(sub.raw_formulas)

    # -- formulas (raw trees; resolved later) ---------------------------------
    def _formula(self):
        left = self._f_or()
        if self.at_op("->"):
            self.advance()
            return ("implies", left, self._formula())
        return left

    def _f_or(self):
        left = self._f_and()
        while self.at_op("||"):
            self.advance()
            left = ("for", left, self._f_and())
        return left

    def _f_and(self):
        left = self._f_unary()
        while self.at_op("&&"):
            self.advance()
            left = ("fand", left, self._f_unary())
        return left

    def _f_unary(self):
        tok = self.peek()
        if self.at_op("!"):
            self.advance()
            return ("fnot", self._f_unary())
        if self.at_op("("):
            self.advance()
            inner = self._formula()
            if self.at("ident") and self.peek().text == "U":
                raise ParseError("'U' belongs under a path quantifier: "
                                 "A (f U g) or <<..>>^k (f U g)", self.span())
            self.expect_op(")")
            return inner
        if self.at_op("<<"):
            return self._strategic(tok)
        if self.at("ident") and self.peek().text == "A" and self._next_is_temporal():
            self.advance()
            op, subs = self._temporal_tail()
            return ("strategic", (), 0, op, subs, (), self.span(tok))
        if self.at("ident") and self.peek().text == "K" and self.peek(1).text == "[":
            self.advance()
            self.expect_op("[")
            agent = self.ident("agent name")
            self.expect_op("]")
            return ("knows", agent, self._f_unary(), self.span(tok))
        if self.at("true"):
            self.advance()
            return ("fatom", ("true",), self.span(tok))
        if self.at("false"):
            self.advance()
            return ("fatom", ("false",), self.span(tok))
        return ("fatom", self._g_atom(), self.span(tok))

    def _next_is_temporal(self) -> bool:
        nxt = self.peek(1)
        return (nxt.kind == "ident" and nxt.text in ("X", "F", "G")) or \
            (nxt.kind == "op" and nxt.text == "(")

    def _strategic(self, tok: Token):
        self.expect_op("<<")
        coalition: list[str] = []
        witnesses: list[str] = []
        while not self.at_op(">>"):
            coalition.append(self.ident("agent name"))
            if self.at_op(":"):
                self.advance()
                witnesses.append(self.ident("strategy name"))
            if self.at_op(","):
                self.advance()
        self.expect_op(">>")
        if witnesses and len(witnesses) != len(coalition):
            raise ParseError("either every coalition member names a witness "
                             "strategy or none does", self.span(tok))
        self.expect_op("^")
        bound = self.integer()
        op, subs = self._temporal_tail()
        return ("strategic", tuple(coalition), bound, op, subs,
                tuple(witnesses), self.span(tok))

    def _temporal_tail(self):
        if self.at("ident") and self.peek().text in ("X", "F", "G"):
            op = self.advance().text
            return op, (self._f_unary(),)
        if self.at_op("("):
            self.advance()
            left = self._formula()
            if not (self.at("ident") and self.peek().text == "U"):
                raise self.fail("'U'")
            self.advance()
            right = self._formula()
            self.expect_op(")")
            return "U", (left, right)
        raise self.fail("temporal operator X/F/G or '(f U g)'")


# ---------------------------------------------------------------------------
# Resolution

class _Resolver:
    def __init__(self, parser: _BundleParser, spans: dict[int, SourceSpan],
                 external_net: Optional[Network] = None):
        self.p = parser
        self.spans = spans
        self.external_net = external_net
        self.net: Optional[Network] = None

    # -- network --------------------------------------------------------------
    def build_network(self, name: str) -> Optional[Network]:
        p = self.p
        if not p.agents and not p.globals and not p.channels:
            return self.external_net
        if self.external_net is not None and p.agents:
            raise DefinitionError("source declares agents but a network was "
                                  "also supplied")
        consts = dict(p.constants)

        def bound_value(b, span) -> int:
            if isinstance(b, int):
                return b
            if b.name in consts:
                return consts[b.name]
            raise ParseError(f"unknown constant {b.name} in variable bounds", span)

        global_decls = []
        for gname, lo, hi, init, span in p.globals:
            global_decls.append(VarDecl(gname, bound_value(lo, span),
                                        bound_value(hi, span), init))
        # first pass: location/variable tables for name resolution
        self.loc_owner: dict[str, list[str]] = {}
        self.agent_locs: dict[str, set[str]] = {}
        self.atom_alias: dict[str, list[tuple[str, str]]] = {}
        self.local_vars: dict[str, set[str]] = {}
        self.global_vars = {d.name for d in global_decls}
        self.consts = consts
        for a in p.agents:
            locs = {l for l, _, _ in a.locations}
            self.agent_locs[a.name] = locs
            for l, labels, _ in a.locations:
                self.loc_owner.setdefault(l, []).append(a.name)
                for lbl in labels:
                    self.atom_alias.setdefault(lbl, []).append((a.name, l))
            self.local_vars[a.name] = set()
            for vname, lo, hi, init, span in a.raw_var_bounds:
                a.variables.append((VarDecl(vname, bound_value(lo, span),
                                            bound_value(hi, span), init), span))
                self.local_vars[a.name].add(vname)

        channels = tuple(n for n, _ in p.channels)
        templates = []
        for a in p.agents:
            edges = []
            for re_ in a.edges:
                for endpoint in (re_.source, re_.target):
                    if endpoint not in self.agent_locs[a.name]:
                        raise ParseError(
                            f"agent {a.name}: undeclared location {endpoint}",
                            re_.span)
                guard = self.resolve_guard(re_.guard, owner=a.name, strict=False)
                updates = tuple(
                    Assignment(self.resolve_var(nm, a.name, re_.span, writing=True),
                               self.resolve_int(ie, a.name, re_.span))
                    for nm, ie in re_.updates)
                if re_.sync is not None and re_.sync[0] not in channels:
                    raise ParseError(f"undeclared channel {re_.sync[0]}", re_.span)
                edge = Edge(source=re_.source, target=re_.target,
                            action=re_.action, guard=guard, sync=re_.sync,
                            updates=updates)
                self.spans[id(edge)] = re_.span
                edges.append(edge)
            labels = tuple((lbl, l) for l, lbls, _ in a.locations for lbl in lbls)
            used = set()
            for re_ in a.edges:
                for ref in _raw_const_refs(re_.guard):
                    if ref in consts:
                        used.add(ref)
            tpl = AgentTemplate(
                name=a.name,
                locations=tuple(l for l, _, _ in a.locations),
                initial=a.initial,
                local_vars=tuple(d for d, _ in a.variables),
                edges=tuple(edges),
                lazy=a.lazy,
                atom_labels=labels,
                formal_constants=tuple(sorted(used)))
            self.spans[id(tpl)] = a.span
            templates.append(tpl)
        try:
            net = Network(name=name, agents=tuple(templates),
                          global_vars=tuple(global_decls), channels=channels,
                          constants=tuple(sorted(consts.items())))
        except DefinitionError as exc:
            raise ParseError(str(exc), SourceSpan(self.p.filename, 1, 1))
        self.net = net
        return net

    def _tables_from_network(self, net: Network):
        self.loc_owner = {}
        self.agent_locs = {}
        self.atom_alias = {}
        self.local_vars = {}
        for a in net.agents:
            self.agent_locs[a.name] = set(a.locations)
            for l in a.locations:
                self.loc_owner.setdefault(l, []).append(a.name)
            for lbl, l in a.atom_labels:
                self.atom_alias.setdefault(lbl, []).append((a.name, l))
            self.local_vars[a.name] = {v.name for v in a.local_vars}
        self.global_vars = {v.name for v in net.global_vars}
        self.consts = dict(net.constants)

    # -- name resolution -------------------------------------------------------
    def resolve_var(self, name: str, owner: Optional[str], span: SourceSpan,
                    writing: bool = False) -> VarRef:
        if owner is not None and name in self.local_vars.get(owner, ()):
            return VarRef(owner, name)
        if name in self.global_vars:
            return VarRef(None, name)
        if name in self.consts:
            if writing:
                raise ParseError(f"cannot assign to constant {name}", span)
            return VarRef(None, name)
        if owner is None:
            owners = [a for a, names in self.local_vars.items() if name in names]
            if len(owners) == 1:
                return VarRef(owners[0], name)
            if len(owners) > 1:
                raise ParseError(f"ambiguous variable {name} "
                                 f"(locals of {', '.join(sorted(owners))})", span)
        raise ParseError(f"undeclared variable {name}", span)

    def resolve_atom(self, raw: _RawName, span: SourceSpan, owner: Optional[str],
                     strict: bool) -> GuardExpr:
        if raw.agent is not None:
            if raw.agent not in self.agent_locs:
                raise ParseError(f"unknown agent {raw.agent}", span)
            if raw.name not in self.agent_locs[raw.agent]:
                raise ParseError(f"agent {raw.agent} has no location {raw.name}", span)
            if strict and owner is not None and raw.agent != owner:
                raise ParseError(
                    f"guard atom {raw.agent}@{raw.name} is not observable by "
                    f"{owner} (own locations, own locals and globals only)", span)
            return LocAtom(raw.agent, raw.name, qualified=True)
        name = raw.name
        is_own_loc = owner is not None and name in self.agent_locs.get(owner, ())
        if is_own_loc:
            return LocAtom(owner, name)
        owners = self.loc_owner.get(name, [])
        aliases = self.atom_alias.get(name, [])
        is_var = (owner is not None and name in self.local_vars.get(owner, ())) \
            or name in self.global_vars
        if owner is None:
            is_var = is_var or any(name in names for names in self.local_vars.values())
        if (owners or aliases) and is_var:
            raise ParseError(f"ambiguous atom {name}: both a location and a "
                             f"variable; qualify it", span)
        if owners or aliases:
            candidates = [(a, name) for a in owners] + aliases
            if len(candidates) > 1:
                raise ParseError(f"ambiguous location atom {name}; "
                                 f"use Agent@{name}", span)
            agent, loc = candidates[0]
            if strict and owner is not None and agent != owner:
                raise ParseError(
                    f"guard atom {name} (location of {agent}) is not "
                    f"observable by {owner}", span)
            return LocAtom(agent, loc)
        ref = self.resolve_var(name, owner, span)
        if strict and owner is not None and ref.owner not in (None, owner):
            raise ParseError(f"variable {name} of agent {ref.owner} is not "
                             f"observable by {owner}", span)
        if ref.owner is None and name in self.consts and name not in self.global_vars:
            raise ParseError(f"constant {name} cannot stand alone as an atom", span)
        return VarAtom(ref)

    def resolve_guard(self, raw, owner: Optional[str], strict: bool) -> GuardExpr:
        kind = raw[0]
        if kind == "true":
            return TrueConst()
        if kind == "false":
            return FalseConst()
        if kind == "not":
            node = Not(self.resolve_guard(raw[1], owner, strict))
            self._copy_span(node, node.sub)
            return node
        if kind == "and":
            node = And(self.resolve_guard(raw[1], owner, strict),
                       self.resolve_guard(raw[2], owner, strict))
            self._copy_span(node, node.left)
            return node
        if kind == "or":
            node = Or(self.resolve_guard(raw[1], owner, strict),
                      self.resolve_guard(raw[2], owner, strict))
            self._copy_span(node, node.left)
            return node
        if kind == "atom":
            node = self.resolve_atom(raw[1], raw[2], owner, strict)
            self.spans[id(node)] = raw[2]
            return node
        if kind == "cmp":
            _, lhs, op, rhs, span = raw
            lref = self.resolve_var(lhs.name, owner, span)
            if strict and owner is not None and lref.owner not in (None, owner):
                raise ParseError(f"variable {lhs.name} of agent {lref.owner} "
                                 f"is not observable by {owner}", span)
            rhs_res: Union[int, VarRef]
            if isinstance(rhs, int):
                rhs_res = rhs
            else:
                rhs_res = self.resolve_var(rhs.name, owner, span)
                if strict and owner is not None and rhs_res.owner not in (None, owner):
                    raise ParseError(f"variable {rhs.name} of agent "
                                     f"{rhs_res.owner} is not observable by "
                                     f"{owner}", span)
            node = Comparison(lref, op, rhs_res)
            self.spans[id(node)] = span
            return node
        raise AssertionError(f"bad raw guard {raw!r}")

    def _copy_span(self, node, source_child) -> None:
        span = self.spans.get(id(source_child))
        if span is not None:
            self.spans[id(node)] = span

    def resolve_int(self, raw, owner: Optional[str], span: SourceSpan) -> IntExpr:
        kind = raw[0]
        if kind == "lit":
            return IntLit(raw[1])
        if kind == "var":
            return IntVar(self.resolve_var(raw[1].name, owner, raw[2]))
        if kind == "bin":
            return IntBin(raw[1], self.resolve_int(raw[2], owner, span),
                          self.resolve_int(raw[3], owner, span))
        raise AssertionError(f"bad raw int expr {raw!r}")

    # -- strategies -------------------------------------------------------------
    def build_strategy(self, raw: dict, net: Network) -> NaturalStrategy:
        agent = raw["agent"]
        if agent not in {a.name for a in net.agents}:
            raise ParseError(f"unknown agent {agent}", raw["span"])
        tpl = net.agent(agent)
        actions = {e.action for e in tpl.edges}
        if tpl.lazy:
            from .model import WAIT_ACTION
            actions.add(WAIT_ACTION)
        rules = []
        for guard_raw, action, span in raw["rules"]:
            guard = self.resolve_guard(guard_raw, owner=agent, strict=True)
            if action is not WILDCARD and action not in actions:
                raise ParseError(f"agent {agent} has no action {action}", span)
            rule = Rule(guard, action)
            self.spans[id(rule)] = span
            rules.append(rule)
        if not rules:
            raise ParseError("empty strategy", raw["span"])
        if not raw["partial"] and not isinstance(rules[-1].guard, TrueConst):
            raise ParseError(
                "missing final 'when true do ...;' rule (declare the strategy "
                "'partial' to allow running out of rules)", raw["span"])
        s = NaturalStrategy(agent=agent, rules=tuple(rules), name=raw["name"],
                            declared_partial=raw["partial"])
        self.spans[id(s)] = raw["span"]
        return s

    # -- formulas ----------------------------------------------------------------
    def build_formula(self, raw, net: Network) -> Formula:
        kind = raw[0]
        if kind == "fatom":
            guard = self.resolve_guard(raw[1], owner=None, strict=False)
            node: Formula = FAtom(guard)
        elif kind == "fnot":
            node = FNot(self.build_formula(raw[1], net))
        elif kind == "fand":
            node = FAnd(self.build_formula(raw[1], net),
                        self.build_formula(raw[2], net))
        elif kind == "for":
            node = FOr(self.build_formula(raw[1], net),
                       self.build_formula(raw[2], net))
        elif kind == "implies":
            node = FImplies(self.build_formula(raw[1], net),
                            self.build_formula(raw[2], net))
        elif kind == "knows":
            _, agent, sub, span = raw
            if agent not in {a.name for a in net.agents}:
                raise ParseError(f"unknown agent {agent} under K", span)
            node = Knows(agent, self.build_formula(sub, net))
        elif kind == "strategic":
            _, coalition, bound, op, subs, witnesses, span = raw
            for agent in coalition:
                if agent not in {a.name for a in net.agents}:
                    raise ParseError(f"unknown agent {agent} in coalition", span)
            node = Strategic(coalition=tuple(coalition), bound=bound, op=op,
                             subs=tuple(self.build_formula(s, net) for s in subs),
                             witness=tuple(witnesses))
        else:
            raise AssertionError(f"bad raw formula {raw!r}")
        return node


def _raw_const_refs(raw):
    kind = raw[0]
    if kind == "cmp":
        if isinstance(raw[3], _RawName):
            yield raw[3].name
    elif kind in ("not",):
        yield from _raw_const_refs(raw[1])
    elif kind in ("and", "or"):
        yield from _raw_const_refs(raw[1])
        yield from _raw_const_refs(raw[2])


# ---------------------------------------------------------------------------
# Public API

def parse_bundle(text: str, filename: str = "<string>",
                 net: Optional[Network] = None,
                 consts: Optional[dict[str, int]] = None,
                 network_name: Optional[str] = None) -> ParsedBundle:
    """Parse one source (network and/or strategies and/or formulas).

    `consts` overrides declared constant values (parameterized models).
    `net` supplies the network context when the source has no agent blocks.
    """
    parser = _BundleParser(_tokenize(text, filename), filename,
                           consts_override=consts)
    parser.parse_items()
    spans: dict[int, SourceSpan] = {}
    resolver = _Resolver(parser, spans, external_net=net)
    name = network_name or (Path(filename).stem if filename != "<string>" else "net")
    network = resolver.build_network(name)
    if network is not None and resolver.net is None:
        resolver._tables_from_network(network)
        resolver.net = network
    bundle = ParsedBundle(network=network, spans=spans)
    if parser.raw_strategies or parser.raw_formulas:
        if network is None:
            first = (parser.raw_strategies + parser.raw_formulas)[0]
            raise ParseError("strategies/formulas need a network (same file, "
                             "include, or the net= argument)", first["span"])
        for raw in parser.raw_strategies:
            if raw["name"] in bundle.strategies:
                raise ParseError(f"duplicate strategy {raw['name']}", raw["span"])
            bundle.strategies[raw["name"]] = resolver.build_strategy(raw, network)
        for raw in parser.raw_formulas:
            if raw["name"] in bundle.formulas:
                raise ParseError(f"duplicate formula {raw['name']}", raw["span"])
            bundle.formulas[raw["name"]] = resolver.build_formula(raw["tree"], network)
    return bundle


def load_bundle(path, net: Optional[Network] = None,
                consts: Optional[dict[str, int]] = None) -> ParsedBundle:
    p = Path(path)
    return parse_bundle(p.read_text(encoding="utf-8"), filename=str(p),
                        net=net, consts=consts)


def parse_network(text: str, filename: str = "<string>",
                  consts: Optional[dict[str, int]] = None,
                  name: Optional[str] = None) -> Network:
    bundle = parse_bundle(text, filename=filename, consts=consts,
                          network_name=name)
    if bundle.network is None:
        raise ParseError("source declares no network",
                         SourceSpan(filename, 1, 1))
    return bundle.network


def parse_strategy(text: str, net: Network, filename: str = "<string>") -> NaturalStrategy:
    bundle = parse_bundle(text, filename=filename, net=net)
    if len(bundle.strategies) != 1:
        raise ParseError("expected exactly one strategy",
                         SourceSpan(filename, 1, 1))
    return next(iter(bundle.strategies.values()))


def parse_formula(text: str, net: Network, filename: str = "<string>") -> Formula:
    bundle = parse_bundle(f"formula _f = {text};", filename=filename, net=net)
    return bundle.formulas["_f"]


def parse_guard_text(text: str, net: Network, owner: Optional[str] = None) -> GuardExpr:
    """Parse a bare guard expression in the context of a network."""
    parser = _BundleParser(_tokenize(text, "<guard>"), "<guard>")
    raw = parser.parse_guard()
    if not parser.at("eof"):
        raise parser.fail("end of guard")
    resolver = _Resolver(parser, {}, external_net=net)
    resolver._tables_from_network(net)
    return resolver.resolve_guard(raw, owner=owner, strict=owner is not None)


# ---------------------------------------------------------------------------
# Pretty-printing (round-trips through the parsers)

def print_guard(g: GuardExpr) -> str:
    return str(g)


def print_strategy(s: NaturalStrategy) -> str:
    partial = s.declared_partial or not isinstance(s.rules[-1].guard, TrueConst)
    head = "partial strategy" if partial else "strategy"
    name = s.name or "unnamed"
    lines = [f"{head} {name} for {s.agent} {{"]
    lines += [f"  {r}" for r in s.rules]
    lines.append("}")
    return "\n".join(lines)


def print_formula(f: Formula) -> str:
    return str(f)


def print_network(net: Network) -> str:
    out: list[str] = []
    for n, v in net.constants:
        out.append(f"const {n} = {v};")
    for c in net.channels:
        out.append(f"channel {c};")
    for v in net.global_vars:
        out.append(f"global int[{v.lo},{v.hi}] {v.name} = {v.init};")
    for a in net.agents:
        flag = "(lazy)" if a.lazy else ""
        out.append(f"agent {a.name}{flag} {{")
        for v in a.local_vars:
            out.append(f"  var int[{v.lo},{v.hi}] {v.name} = {v.init};")
        out.append(f"  init {a.initial};")
        for loc in a.locations:
            labels = [lbl for lbl, l in a.atom_labels if l == loc]
            suffix = f" [{', '.join(labels)}]" if labels else ""
            if loc == a.initial and not labels:
                continue  # init already declared it
            out.append(f"  loc {loc}{suffix};")
        for e in a.edges:
            parts = [f"  edge {e.source} -> {e.target} on {e.action}"]
            if not isinstance(e.guard, TrueConst):
                parts.append(f"when {e.guard}")
            if e.sync is not None:
                parts.append(f"sync {e.sync[0]}{e.sync[1]}")
            if e.updates:
                parts.append("do " + ", ".join(str(u) for u in e.updates))
            out.append(" ".join(parts) + ";")
        out.append("}")
    return "\n".join(out) + "\n"
