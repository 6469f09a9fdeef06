"""Loading and indexing of line-oriented ASDL grammars.

A grammar file looks like::

    axiom expr
    primitives constant
    expr = BinOp(expr left, operator op, expr right)
    operator = Add
    expr = Constant(constant value)
    expr = List(expr* elts)

Every rule line defines exactly one constructor.  ``#`` starts a comment.
Only the ``*`` qualifier is accepted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterator

__all__ = [
    "GrammarError",
    "GrammarSyntaxError",
    "Field",
    "Production",
    "Grammar",
    "parse_grammar",
    "load_grammar",
    "bundled_grammar",
    "format_grammar",
    "constructors_for",
    "TOY_GRAMMAR_TEXT",
]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

TOY_GRAMMAR_TEXT = """\
axiom expr
primitives constant
expr = BinOp(expr left, operator op, expr right)
operator = Add
expr = Constant(constant value)
expr = List(expr* elts)
"""


class GrammarError(ValueError):
    """Raised for grammars that are syntactically fine but inconsistent."""


class GrammarSyntaxError(GrammarError):
    def __init__(self, msg: str, line: int, column: int):
        self.msg = msg
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {msg}")


@dataclass(frozen=True)
class Field:
    symbol: str
    label: str
    star: bool = False

    @property
    def qualifier(self) -> str:
        return "star" if self.star else "single"

    def __str__(self) -> str:
        return f"{self.symbol}{'*' if self.star else ''} {self.label}"


@dataclass(frozen=True)
class Production:
    lhs: str
    constructor: str
    fields: tuple[Field, ...] = ()

    def __str__(self) -> str:
        if not self.fields:
            return f"{self.lhs} = {self.constructor}"
        inner = ", ".join(str(f) for f in self.fields)
        return f"{self.lhs} = {self.constructor}({inner})"

    def field_index(self, label: str) -> int:
        for i, f in enumerate(self.fields):
            if f.label == label:
                return i
        raise KeyError(label)


@dataclass(frozen=True)
class Grammar:
    """An immutable, validated rule set.

    Use :func:`parse_grammar` rather than constructing this directly;
    ``__post_init__`` re-checks every invariant anyway.
    """

    productions: tuple[Production, ...]
    primitives: frozenset[str]
    axiom: str
    _by_ctor: dict = field(init=False, repr=False, compare=False)
    _by_lhs: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        by_ctor: dict[str, Production] = {}
        by_lhs: dict[str, list[Production]] = {}
        for p in self.productions:
            if p.constructor in by_ctor:
                raise GrammarError(f"duplicate constructor {p.constructor!r}")
            by_ctor[p.constructor] = p
            by_lhs.setdefault(p.lhs, []).append(p)
        object.__setattr__(self, "_by_ctor", by_ctor)
        object.__setattr__(self, "_by_lhs", {k: tuple(v) for k, v in by_lhs.items()})
        self._validate()

    def _validate(self) -> None:
        clash = self.primitives & self.nonterminals
        if clash:
            raise GrammarError(f"symbols declared both primitive and nonterminal: {sorted(clash)}")
        known = self.primitives | self.nonterminals
        for p in self.productions:
            seen = set()
            for f in p.fields:
                if f.symbol not in known:
                    raise GrammarError(
                        f"unknown symbol {f.symbol!r} in field {f.label!r} of {p.constructor}"
                    )
                if f.label in seen:
                    raise GrammarError(f"duplicate field label {f.label!r} in {p.constructor}")
                seen.add(f.label)
        if self.axiom not in self.nonterminals:
            raise GrammarError(f"axiom {self.axiom!r} is not a nonterminal")

    @property
    def nonterminals(self) -> frozenset[str]:
        return frozenset(self._by_lhs)

    def production(self, constructor: str) -> Production:
        try:
            return self._by_ctor[constructor]
        except KeyError:
            raise GrammarError(f"unknown constructor {constructor!r}") from None

    def has_constructor(self, constructor: str) -> bool:
        return constructor in self._by_ctor

    def constructors_for(self, nonterminal: str) -> tuple[Production, ...]:
        try:
            return self._by_lhs[nonterminal]
        except KeyError:
            raise GrammarError(f"unknown nonterminal {nonterminal!r}") from None

    def is_primitive(self, symbol: str) -> bool:
        return symbol in self.primitives

    def __iter__(self) -> Iterator[Production]:
        return iter(self.productions)

    def __len__(self) -> int:
        return len(self.productions)


def constructors_for(g: Grammar, nonterminal: str) -> tuple[Production, ...]:
    return g.constructors_for(nonterminal)


class _LineParser:
    def __init__(self, line: str, lineno: int):
        self.s = line
        self.pos = 0
        self.lineno = lineno

    def error(self, msg: str, pos: int | None = None):
        col = (self.pos if pos is None else pos) + 1
        raise GrammarSyntaxError(msg, self.lineno, col)

    def skip_ws(self):
        while self.pos < len(self.s) and self.s[self.pos] in " \t":
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.s)

    def ident(self, what: str) -> str:
        self.skip_ws()
        m = _IDENT.match(self.s, self.pos)
        if not m:
            self.error(f"expected {what}")
        self.pos = m.end()
        return m.group()

    def expect(self, ch: str):
        self.skip_ws()
        if not self.s.startswith(ch, self.pos):
            self.error(f"expected {ch!r}")
        self.pos += len(ch)

    def peek(self) -> str:
        self.skip_ws()
        return self.s[self.pos] if self.pos < len(self.s) else ""


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def parse_grammar(text: str) -> Grammar:
    """Parse grammar source text into a validated :class:`Grammar`.

    Raises :class:`GrammarSyntaxError` with line/column for malformed lines
    and :class:`GrammarError` for semantic problems (duplicate constructor,
    unknown symbol, missing axiom).
    """
    axiom = None
    primitives: list[str] = []
    prims_seen = False
    productions: list[Production] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).rstrip()
        if not line.strip():
            continue
        p = _LineParser(line, lineno)
        head = p.ident("rule, 'axiom' or 'primitives'")
        if head == "axiom" and p.peek() != "=":
            if axiom is not None:
                p.error("axiom declared twice", 0)
            axiom = p.ident("axiom name")
            if not p.at_end():
                p.error("trailing text after axiom name")
            continue
        if head == "primitives" and p.peek() != "=":
            if prims_seen:
                p.error("primitives declared twice", 0)
            prims_seen = True
            while not p.at_end():
                primitives.append(p.ident("primitive name"))
            continue

        lhs = head
        p.expect("=")
        ctor = p.ident("constructor name")
        fields: list[Field] = []
        if p.peek() == "(":
            p.expect("(")
            if p.peek() != ")":
                while True:
                    sym = p.ident("field symbol")
                    star = False
                    nxt = p.peek()
                    if nxt == "*":
                        p.pos += 1
                        star = True
                    elif nxt == "?":
                        p.error(
                            "optional qualifier unsupported; rewrite as a dedicated constructor"
                        )
                    elif nxt == "+":
                        p.error("'+' qualifier unsupported; only '*' is accepted")
                    label = p.ident("field label")
                    fields.append(Field(sym, label, star))
                    if p.peek() == ",":
                        p.pos += 1
                        continue
                    break
            p.expect(")")
        if not p.at_end():
            if p.peek() == "|":
                p.error("'|' alternatives unsupported; write one constructor per line")
            p.error("unexpected trailing text")
        productions.append(Production(lhs, ctor, tuple(fields)))

    if axiom is None:
        raise GrammarError("missing axiom declaration")
    return Grammar(tuple(productions), frozenset(primitives), axiom)


def format_grammar(g: Grammar) -> str:
    """Render ``g`` back to the textual format; reparsing gives an equal grammar."""
    lines = [f"axiom {g.axiom}"]
    lines.append(" ".join(["primitives", *sorted(g.primitives)]))
    lines.extend(str(p) for p in g.productions)
    return "\n".join(lines) + "\n"


def load_grammar(path) -> Grammar:
    with open(path, encoding="utf-8") as f:
        return parse_grammar(f.read())


_BUNDLED: dict[str, Grammar] = {}
BUNDLED = ("mini_python", "toy_expr")


def bundled_grammar(name: str = "mini_python") -> Grammar:
    """Return one of the grammars shipped in ``asdlgen/data``.

    ``"toy_expr"`` is the four-rule expression fragment; ``"mini_python"``
    covers everything the surface codec can print.
    """
    if name not in BUNDLED:
        raise GrammarError(f"no bundled grammar {name!r}; choose from {', '.join(BUNDLED)}")
    if name not in _BUNDLED:
        if name == "toy_expr":
            _BUNDLED[name] = parse_grammar(TOY_GRAMMAR_TEXT)
        else:
            text = resources.files("asdlgen.data").joinpath(f"{name}.asdl").read_text("utf-8")
            _BUNDLED[name] = parse_grammar(text)
    return _BUNDLED[name]


def bundled_grammar_path(name: str = "mini_python"):
    return resources.files("asdlgen.data").joinpath(f"{name}.asdl")
