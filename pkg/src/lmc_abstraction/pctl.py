"""PCTL formulas: AST, a recursive-descent parser, a printer and desugaring.

Concrete syntax::

    state := 'true' | '"atom"' | '!' state | state '&' state | '(' state ')'
           | ('P' cmp num | 'P=?' | 'Pmin=?' | 'Pmax=?') '[' path ']'
    path  := 'X' state | state 'U' bound? state | 'G' bound? state
    bound := '<=' integer
    cmp   := '<' | '>' | '<=' | '>='

``!`` binds tighter than ``&``, and ``&`` associates to the left.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from typing import Union

from .errors import PctlSyntaxError, ThresholdOutOfRange

INF = math.inf

COMPARISONS = ("<", "<=", ">", ">=")
DUAL = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}
SWAP_MODE = {"min": "max", "max": "min", "plain": "plain"}


@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class And:
    left: "StateFormula"
    right: "StateFormula"


@dataclass(frozen=True)
class Not:
    arg: "StateFormula"


@dataclass(frozen=True)
class Prob:
    cmp: str
    threshold: float
    path: "PathFormula"

    def __post_init__(self):
        if self.cmp not in COMPARISONS:
            raise ValueError(f"unknown comparison {self.cmp!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ThresholdOutOfRange(f"threshold {self.threshold} outside [0, 1]")


@dataclass(frozen=True)
class ProbQuery:
    """``P=? [path]``, ``Pmin=?`` or ``Pmax=?``.

    ``complement`` marks a query rewritten as one minus another query, which
    is how desugaring removes ``G`` from a query.
    """

    mode: str
    path: "PathFormula"
    complement: bool = False


@dataclass(frozen=True)
class Next:
    arg: "StateFormula"


@dataclass(frozen=True)
class Until:
    left: "StateFormula"
    right: "StateFormula"
    bound: float = INF


@dataclass(frozen=True)
class Globally:
    arg: "StateFormula"
    bound: float = INF


StateFormula = Union[TrueF, Atom, And, Not, Prob, ProbQuery]
PathFormula = Union[Next, Until, Globally]


# --- lexer ------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<query>Pmin=\?|Pmax=\?|P=\?)
  | (?P<cmp><=|>=|<|>)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<atom>"[^"]*")
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[\[\]()!&])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"P", "X", "U", "G", "true"}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise PctlSyntaxError(pos + 1, "a token", text)
        kind = m.lastgroup
        if kind == "word" and m.group() not in _KEYWORDS:
            raise PctlSyntaxError(pos + 1, "a keyword or quoted atom", text)
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos + 1))
        pos = m.end()
    toks.append(_Tok("end", "", len(text) + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def fail(self, expected: str):
        raise PctlSyntaxError(self.tok.col, expected, self.text)

    def eat(self, text: str) -> _Tok:
        if self.tok.text != text:
            self.fail(repr(text))
        tok = self.tok
        self.i += 1
        return tok

    def state(self):
        node = self.unary()
        while self.tok.text == "&":
            self.i += 1
            node = And(node, self.unary())
        return node

    def unary(self):
        if self.tok.text == "!":
            self.i += 1
            return Not(self.unary())
        return self.primary()

    def primary(self):
        tok = self.tok
        if tok.text == "true":
            self.i += 1
            return TrueF()
        if tok.kind == "atom":
            self.i += 1
            return Atom(tok.text[1:-1])
        if tok.text == "(":
            self.i += 1
            node = self.state()
            self.eat(")")
            return node
        if tok.kind == "query":
            self.i += 1
            mode = {"P=?": "plain", "Pmin=?": "min", "Pmax=?": "max"}[tok.text]
            return ProbQuery(mode, self.bracketed_path())
        if tok.text == "P":
            self.i += 1
            if self.tok.kind != "cmp":
                self.fail("a comparison operator")
            cmp = self.tok.text
            self.i += 1
            if self.tok.kind != "num":
                self.fail("a probability threshold")
            num_tok = self.tok
            p = float(num_tok.text)
            self.i += 1
            path = self.bracketed_path()
            if not 0.0 <= p <= 1.0:
                raise ThresholdOutOfRange(
                    f"column {num_tok.col}: threshold {p} outside [0, 1]"
                )
            return Prob(cmp, p, path)
        self.fail("a state formula")

    def bracketed_path(self):
        self.eat("[")
        path = self.path()
        self.eat("]")
        return path

    def bound(self) -> float:
        if self.tok.text != "<=":
            return INF
        self.i += 1
        tok = self.tok
        if tok.kind != "num" or not tok.text.isdigit():
            self.fail("an integer step bound")
        self.i += 1
        return int(tok.text)

    def path(self):
        if self.tok.text == "X":
            self.i += 1
            return Next(self.state())
        if self.tok.text == "G":
            self.i += 1
            k = self.bound()
            return Globally(self.state(), k)
        left = self.state()
        if self.tok.text != "U":
            self.fail("'U'")
        self.i += 1
        k = self.bound()
        return Until(left, self.state(), k)


def parse_formula(text: str) -> StateFormula:
    """Parse a PCTL state formula; raises :class:`PctlSyntaxError` with a 1-based column."""
    p = _Parser(text)
    node = p.state()
    if p.tok.kind != "end":
        p.fail("end of formula")
    return node


def parse_path(text: str) -> PathFormula:
    p = _Parser(text)
    node = p.path()
    if p.tok.kind != "end":
        p.fail("end of formula")
    return node


# --- printer ----------------------------------------------------------------


def _bound(k) -> str:
    return "" if k == INF else f"<={int(k)}"


def to_text(f) -> str:
    """Render a formula in the concrete syntax accepted by :func:`parse_formula`."""
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, Atom):
        return f'"{f.name}"'
    if isinstance(f, Not):
        inner = to_text(f.arg)
        return f"!({inner})" if isinstance(f.arg, And) else f"!{inner}"
    if isinstance(f, And):
        right = to_text(f.right)
        if isinstance(f.right, And):
            right = f"({right})"
        return f"{to_text(f.left)} & {right}"
    if isinstance(f, Prob):
        return f"P{f.cmp}{f.threshold!r} [ {to_text(f.path)} ]"
    if isinstance(f, ProbQuery):
        if f.complement:
            return to_text(resugar_query(f))
        head = {"plain": "P=?", "min": "Pmin=?", "max": "Pmax=?"}[f.mode]
        return f"{head} [ {to_text(f.path)} ]"
    if isinstance(f, Next):
        return f"X {to_text(f.arg)}"
    if isinstance(f, Globally):
        return f"G{_bound(f.bound)} {to_text(f.arg)}"
    if isinstance(f, Until):
        return f"{to_text(f.left)} U{_bound(f.bound)} {to_text(f.right)}"
    raise TypeError(f"not a formula: {f!r}")


def resugar_query(q: ProbQuery) -> ProbQuery:
    """Turn a complemented ``true U<=k !phi`` query back into a ``G<=k phi`` one."""
    path = q.path
    if not (isinstance(path, Until) and isinstance(path.left, TrueF) and isinstance(path.right, Not)):
        raise ValueError("complemented query has no surface form")
    return ProbQuery(SWAP_MODE[q.mode], Globally(path.right.arg, path.bound))


# --- desugaring ---------------------------------------------------------------


def desugar_path(path):
    """Return ``(path', negated)``; ``negated`` means the result must be complemented."""
    if isinstance(path, Globally):
        return Until(TrueF(), Not(desugar(path.arg)), path.bound), True
    if isinstance(path, Next):
        return Next(desugar(path.arg)), False
    if isinstance(path, Until):
        return Until(desugar(path.left), desugar(path.right), path.bound), False
    raise TypeError(f"not a path formula: {path!r}")


def desugar(f):
    """Eliminate ``G``: ``G<=k phi`` becomes ``!(true U<=k !phi)``.

    On a state formula the negation is pushed into the enclosing operator:
    ``P~p [G phi]`` turns into ``P~' 1-p [true U !phi]`` with ``~'`` the dual
    comparison, and a query becomes a complemented query with min and max
    swapped.  A bare path formula is returned rewritten (``Globally`` must
    then be handled by the caller via :func:`desugar_path`).
    """
    if isinstance(f, (TrueF, Atom)):
        return f
    if isinstance(f, Not):
        return Not(desugar(f.arg))
    if isinstance(f, And):
        return And(desugar(f.left), desugar(f.right))
    if isinstance(f, Prob):
        path, negated = desugar_path(f.path)
        if negated:
            return Prob(DUAL[f.cmp], 1.0 - f.threshold, path)
        return Prob(f.cmp, f.threshold, path)
    if isinstance(f, ProbQuery):
        path, negated = desugar_path(f.path)
        if negated:
            return ProbQuery(SWAP_MODE[f.mode], path, not f.complement)
        return replace(f, path=path)
    if isinstance(f, (Next, Until)):
        return desugar_path(f)[0]
    if isinstance(f, Globally):
        raise TypeError("a bare G formula has no negation-free desugaring; use desugar_path")
    raise TypeError(f"not a formula: {f!r}")


def contains_globally(f) -> bool:
    if isinstance(f, Globally):
        return True
    if isinstance(f, (TrueF, Atom)):
        return False
    if isinstance(f, Not):
        return contains_globally(f.arg)
    if isinstance(f, Next):
        return contains_globally(f.arg)
    if isinstance(f, (And, Until)):
        return contains_globally(f.left) or contains_globally(f.right)
    if isinstance(f, (Prob, ProbQuery)):
        return contains_globally(f.path)
    raise TypeError(f"not a formula: {f!r}")


def path_bound(path) -> float:
    """Step horizon of a path formula (1 for ``X``)."""
    if isinstance(path, Next):
        return 1
    return path.bound


def atoms(f) -> set:
    if isinstance(f, Atom):
        return {f.name}
    if isinstance(f, TrueF):
        return set()
    if isinstance(f, (Not, Next)):
        return atoms(f.arg)
    if isinstance(f, Globally):
        return atoms(f.arg)
    if isinstance(f, (And, Until)):
        return atoms(f.left) | atoms(f.right)
    return atoms(f.path)
