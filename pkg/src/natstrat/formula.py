"""Abstract syntax for strategic-temporal-epistemic queries.

The strategic operator <<A>>^k T carries a coalition, a complexity bound and
a temporal layer T in {X, F, G, U}; the universal path quantifier A is stored
as the empty coalition with bound 0. K[a] is the knowledge operator.
Atomic formulas are guard expressions (location atoms, 0/1 variables,
comparisons) evaluated per state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .model import GuardExpr

TEMPORAL_OPS = ("X", "F", "G", "U")


@dataclass(frozen=True)
class FAtom:
    guard: GuardExpr

    def __str__(self):
        return str(self.guard)


@dataclass(frozen=True)
class FNot:
    sub: "Formula"

    def __str__(self):
        return f"!({self.sub})" if isinstance(self.sub, (FAnd, FOr, FImplies)) else f"!{self.sub}"


@dataclass(frozen=True)
class FAnd:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"{_paren(self.left)} && {_paren(self.right)}"


@dataclass(frozen=True)
class FOr:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"{_paren(self.left)} || {_paren(self.right)}"


@dataclass(frozen=True)
class FImplies:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"{_paren(self.left)} -> {_paren(self.right)}"


@dataclass(frozen=True)
class Strategic:
    """<<coalition>>^bound op(subs); empty coalition + bound 0 is the
    universal path quantifier A. `witness` optionally names a strategy per
    coalition member to check in verify mode."""

    coalition: tuple[str, ...]
    bound: int
    op: str
    subs: tuple["Formula", ...]
    witness: tuple[str, ...] = ()

    def __post_init__(self):
        if self.op not in TEMPORAL_OPS:
            raise ValueError(f"bad temporal operator {self.op}")
        if self.bound < 0:
            raise ValueError("complexity bound must be >= 0")

    @property
    def is_universal(self) -> bool:
        return not self.coalition

    def __str__(self):
        if self.is_universal and self.bound == 0:
            quant = "A"
        else:
            members = ",".join(
                f"{a}:{w}" for a, w in zip(self.coalition, self.witness)
            ) if self.witness else ",".join(self.coalition)
            quant = f"<<{members}>>^{self.bound}"
        if self.op == "U":
            return f"{quant} ({self.subs[0]} U {self.subs[1]})"
        return f"{quant} {self.op} {_paren(self.subs[0])}"


@dataclass(frozen=True)
class Knows:
    agent: str
    sub: "Formula"

    def __str__(self):
        return f"K[{self.agent}] {_paren(self.sub)}"


Formula = Union[FAtom, FNot, FAnd, FOr, FImplies, Strategic, Knows]


def _paren(f: Formula) -> str:
    if isinstance(f, (FAnd, FOr, FImplies)):
        return f"({f})"
    return str(f)


def strategic_nodes(f: Formula):
    if isinstance(f, Strategic):
        yield f
    for sub in subformulas(f):
        yield from strategic_nodes(sub)


def subformulas(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (FNot, Knows)):
        return (f.sub,)
    if isinstance(f, (FAnd, FOr, FImplies)):
        return (f.left, f.right)
    if isinstance(f, Strategic):
        return f.subs
    return ()
