"""Mini-Python codec: source text <-> AST for the bundled grammar.

Only single logical lines are accepted: assignments, augmented assignments
and expression statements built from the constructs in ``mini_python.asdl``.
Anything else raises :class:`UnsupportedConstructError` naming the construct.

The printer is canonical: one space around binary operators and after
commas, none inside brackets, and only the parentheses precedence requires.
"""

from __future__ import annotations

import ast as _pyast
import keyword
import re
from dataclasses import dataclass

from .tree import AstNode, PrimitiveValue, node

__all__ = [
    "SurfaceError",
    "SurfaceSyntaxError",
    "UnsupportedConstructError",
    "UnprintableError",
    "Token",
    "lex",
    "tokenize_code",
    "parse_code",
    "unparse",
    "is_valid_code",
    "canonicalize",
    "canonical_constant",
    "is_valid_primitive",
]


class SurfaceError(ValueError):
    pass


class SurfaceSyntaxError(SurfaceError):
    def __init__(self, msg: str, pos: int | None = None):
        self.msg = msg
        self.pos = pos
        where = f" at column {pos + 1}" if pos is not None else ""
        super().__init__(f"{msg}{where}")


class UnsupportedConstructError(SurfaceSyntaxError):
    def __init__(self, construct: str, pos: int | None = None):
        self.construct = construct
        super().__init__(f"unsupported construct: {construct}", pos)


class UnprintableError(SurfaceError):
    """A grammatical AST that has no rendering as valid code."""


# ---------------------------------------------------------------------------
# lexer


@dataclass(frozen=True)
class Token:
    kind: str  # NAME NUMBER STRING OP END
    text: str
    start: int
    end: int


_NAME_RE = re.compile(r"[^\W\d]\w*")
_D = r"\d(?:_?\d)*"
_EXP = rf"[eE][+-]?{_D}"
_NUMBER_RE = re.compile(
    rf"0[xX](?:_?[0-9a-fA-F])+|0[oO](?:_?[0-7])+|0[bB](?:_?[01])+"
    rf"|(?:{_D})?\.{_D}(?:{_EXP})?|{_D}\.(?:{_D})?(?:{_EXP})?|{_D}{_EXP}"
    rf"|{_D}"
)
_OPERATORS = sorted(
    """**= //= >>= <<= ... -> := ** // << >> <= >= == != += -= *= /= %= &= |= ^= @=
    + - * / % @ & | ^ ~ < > ( ) [ ] { } , : . ; = !""".split(),
    key=len,
    reverse=True,
)
_STRING_PREFIXES = {"", "r", "u", "R", "U"}
_UNSUPPORTED_PREFIX = re.compile(r"(?i)(?:[rb]|br|rb|f|fr|rf)")


def lex(text: str) -> list[Token]:
    toks: list[Token] = []
    i, n, depth = 0, len(text), 0
    while i < n:
        c = text[i]
        if c in " \t\f\r":
            i += 1
            continue
        if c == "\\" and text.startswith("\n", i + 1):
            i += 2
            continue
        if c == "\n":
            if depth > 0 or not text[i:].strip():
                i += 1
                continue
            raise UnsupportedConstructError("multiple lines / statement suite", i)
        if c == "#":
            raise UnsupportedConstructError("comment", i)
        if c in "'\"":
            end = _scan_string(text, i, "")
            toks.append(Token("STRING", text[i:end], i, end))
            i = end
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            m = _NUMBER_RE.match(text, i)
            end = m.end()
            if end < n and text[end] in "jJ":
                raise UnsupportedConstructError("imaginary literal", i)
            if end < n and (text[end].isalnum() or text[end] == "_"):
                raise SurfaceSyntaxError("invalid numeric literal", i)
            lit = m.group()
            if lit[0] == "0" and re.fullmatch(_D, lit) and set(lit) - {"0", "_"}:
                raise SurfaceSyntaxError("leading zeros in decimal literal", i)
            toks.append(Token("NUMBER", lit, i, end))
            i = end
            continue
        m = _NAME_RE.match(text, i)
        if m:
            word = m.group()
            end = m.end()
            if end < n and text[end] in "'\"" and len(word) <= 2:
                if word in _STRING_PREFIXES:
                    send = _scan_string(text, end, word)
                    toks.append(Token("STRING", text[i:send], i, send))
                    i = send
                    continue
                if _UNSUPPORTED_PREFIX.fullmatch(word):
                    kind = "f-string" if "f" in word.lower() else "bytes literal"
                    raise UnsupportedConstructError(kind, i)
            toks.append(Token("NAME", word, i, end))
            i = end
            continue
        for op in _OPERATORS:
            if text.startswith(op, i):
                if op in "([{":
                    depth += 1
                elif op in ")]}":
                    depth = max(depth - 1, 0)
                toks.append(Token("OP", op, i, i + len(op)))
                i += len(op)
                break
        else:
            raise SurfaceSyntaxError(f"unexpected character {c!r}", i)
    toks.append(Token("END", "", n, n))
    return toks


def _scan_string(text: str, i: int, prefix: str) -> int:
    q = text[i]
    triple = text.startswith(q * 3, i)
    delim = q * 3 if triple else q
    j = i + len(delim)
    n = len(text)
    while j < n:
        if text[j] == "\\":
            j += 2
            continue
        if text.startswith(delim, j):
            return j + len(delim)
        if text[j] == "\n" and not triple:
            break
        j += 1
    raise SurfaceSyntaxError("unterminated string literal", i)


def tokenize_code(text: str) -> list[str]:
    """Token strings for BLEU; falls back to a regex split on lexical errors."""
    try:
        return [t.text for t in lex(text) if t.kind != "END"]
    except SurfaceError:
        return re.findall(r"\w+|[^\w\s]", text)


# ---------------------------------------------------------------------------
# primitive values


def canonical_constant(text: str) -> str | None:
    """Canonical text of a literal, or None when ``text`` is not one."""
    try:
        toks = lex(text)
    except SurfaceError:
        return None
    toks = toks[:-1]
    if not toks:
        return None
    if len(toks) == 1 and toks[0].kind == "NAME":
        return toks[0].text if toks[0].text in ("None", "True", "False") else None
    if len(toks) == 1 and toks[0].kind == "NUMBER":
        return _number_text(toks[0].text)
    if all(t.kind == "STRING" for t in toks):
        try:
            return repr("".join(_pyast.literal_eval(t.text) for t in toks))
        except (ValueError, SyntaxError, TypeError):
            return None
    return None


def _number_text(lit: str) -> str | None:
    try:
        v = _pyast.literal_eval(lit)
    except (ValueError, SyntaxError):
        return None
    if isinstance(v, int):
        return str(v)
    if v != v or v in (float("inf"), float("-inf")):
        return None
    return repr(v)


def is_valid_primitive(type_: str, text: str) -> bool:
    """Whether ``text`` can be printed as a value of primitive ``type_``."""
    if type_ == "identifier":
        return text.isidentifier() and not keyword.iskeyword(text)
    if type_ == "constant":
        return canonical_constant(text) == text
    return False


# ---------------------------------------------------------------------------
# parser

_AUG_OPS = {"+=": "Add", "-=": "Sub", "*=": "Mult", "/=": "Div", "%=": "Mod"}
_BIN_OPS = {"+": "Add", "-": "Sub", "*": "Mult", "/": "Div", "%": "Mod"}
_CMP_OPS = {"==": "Eq", "!=": "NotEq", "<": "Lt", "<=": "LtE", ">": "Gt", ">=": "GtE"}
_UNSUPPORTED_OPS = {
    "**": "power operator", "//": "floor division", "@": "matrix multiplication",
    "&": "bitwise operator", "|": "bitwise operator", "^": "bitwise operator",
    "<<": "shift operator", ">>": "shift operator", "~": "bitwise inversion",
    ":=": "assignment expression", "...": "Ellipsis", "->": "annotation",
}
_UNSUPPORTED_KEYWORDS = {
    "import": "import", "from": "import", "def": "function definition",
    "class": "class definition", "return": "return statement", "if": "if statement",
    "for": "for statement", "while": "while statement", "try": "exception handling",
    "raise": "raise statement", "with": "with statement", "del": "del statement",
    "pass": "pass statement", "break": "break statement", "continue": "continue statement",
    "global": "global statement", "nonlocal": "nonlocal statement", "assert": "assert statement",
    "yield": "yield expression", "await": "await expression", "async": "async construct",
    "except": "exception handling", "finally": "exception handling", "else": "else clause",
    "elif": "if statement",
}


def _ident(text: str) -> PrimitiveValue:
    return PrimitiveValue("identifier", text)


def _const(text: str) -> AstNode:
    return node("Constant", value=PrimitiveValue("constant", text))


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = lex(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("OP", "NAME") and t.text in texts

    def at_op(self, *ops: str) -> bool:
        return self.tok.kind == "OP" and self.tok.text in ops

    def at_kw(self, *kws: str) -> bool:
        return self.tok.kind == "NAME" and self.tok.text in kws

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect_op(self, op: str) -> Token:
        if not self.at_op(op):
            self.fail(f"expected {op!r}")
        return self.advance()

    def fail(self, msg: str):
        t = self.tok
        if t.kind == "END":
            raise SurfaceSyntaxError(f"{msg}, got end of input", t.start)
        raise SurfaceSyntaxError(f"{msg}, got {t.text!r}", t.start)

    def unsupported(self, what: str, tok: Token | None = None):
        raise UnsupportedConstructError(what, (tok or self.tok).start)

    # statements

    def statement(self) -> AstNode:
        if self.tok.kind == "END":
            raise SurfaceSyntaxError("empty snippet", 0)
        if self.tok.kind == "NAME" and self.tok.text in _UNSUPPORTED_KEYWORDS \
                and self.tok.text not in ("yield", "await"):
            self.unsupported(_UNSUPPORTED_KEYWORDS[self.tok.text])
        start = self.tok
        first = self.tuple_or_expr()
        if self.at_op("="):
            self.advance()
            _check_target(first, start.start)
            value = self.tuple_or_expr()
            if self.at_op("="):
                self.unsupported("chained assignment")
            if self.at_op(":"):
                self.unsupported("annotated assignment")
            stmt = node("Assign", target=first, value=value)
        elif self.tok.kind == "OP" and self.tok.text in _AUG_OPS:
            op = _AUG_OPS[self.advance().text]
            if first.constructor not in ("Name", "Attribute", "Subscript"):
                raise SurfaceSyntaxError("illegal target for augmented assignment", start.start)
            value = self.tuple_or_expr()
            stmt = node("AugAssign", target=first, op=node(op), value=value)
        elif self.tok.kind == "OP" and self.tok.text.endswith("=") and len(self.tok.text) >= 2 \
                and self.tok.text not in ("==", "!=", "<=", ">="):
            self.unsupported(f"augmented assignment {self.tok.text}")
        elif self.at_op(":"):
            self.unsupported("annotated assignment")
        else:
            stmt = node("Expr", value=first)
        if self.at_op(";"):
            self.unsupported("multiple statements")
        if self.tok.kind != "END":
            self.fail("unexpected token")
        return stmt

    def tuple_or_expr(self) -> AstNode:
        first = self.expression()
        if not self.at_op(","):
            return first
        elts = [first]
        while self.at_op(","):
            self.advance()
            if self.tok.kind == "END" or self.at_op("=", ")", ";") or self.tok.text in _AUG_OPS:
                break
            elts.append(self.expression())
        return node("Tuple", elts=elts)

    # expressions, lowest precedence first

    def expression(self) -> AstNode:
        if self.at_kw("lambda"):
            return self.lambda_()
        if self.at_op("*"):
            self.unsupported("starred expression")
        e = self.disjunction()
        if self.at_kw("if"):
            self.unsupported("conditional expression")
        return e

    def lambda_(self) -> AstNode:
        self.advance()
        args = []
        names = set()
        seen_default = False
        while not self.at_op(":"):
            if self.at_op("*", "**", "/"):
                self.unsupported("lambda star/positional-only parameters")
            if self.tok.kind != "NAME" or keyword.iskeyword(self.tok.text):
                self.fail("expected parameter name")
            name_tok = self.advance()
            if name_tok.text in names:
                raise SurfaceSyntaxError(f"duplicate argument {name_tok.text!r}", name_tok.start)
            names.add(name_tok.text)
            if self.at_op("="):
                self.advance()
                args.append(node("ArgDefault", name=_ident(name_tok.text), default=self.expression()))
                seen_default = True
            else:
                if seen_default:
                    raise SurfaceSyntaxError("non-default argument follows default argument",
                                             name_tok.start)
                args.append(node("Arg", name=_ident(name_tok.text)))
            if self.at_op(","):
                self.advance()
            elif not self.at_op(":"):
                self.fail("expected ',' or ':' in lambda parameters")
        self.expect_op(":")
        body = self.expression()
        return node("Lambda", args=args, body=body)

    def disjunction(self) -> AstNode:
        left = self.conjunction()
        while self.at_kw("or"):
            self.advance()
            left = node("BoolOp", op=node("Or"), left=left, right=self.conjunction())
        return left

    def conjunction(self) -> AstNode:
        left = self.inversion()
        while self.at_kw("and"):
            self.advance()
            left = node("BoolOp", op=node("And"), left=left, right=self.inversion())
        return left

    def inversion(self) -> AstNode:
        if self.at_kw("not"):
            self.advance()
            return node("UnaryOp", op=node("Not"), operand=self.inversion())
        return self.comparison()

    def _cmp_op(self) -> str | None:
        t = self.tok
        if t.kind == "OP" and t.text in _CMP_OPS:
            self.advance()
            return _CMP_OPS[t.text]
        if t.kind == "NAME":
            if t.text == "in":
                self.advance()
                return "In"
            if t.text == "not" and self.peek().kind == "NAME" and self.peek().text == "in":
                self.i += 2
                return "NotIn"
            if t.text == "is":
                self.advance()
                if self.at_kw("not"):
                    self.advance()
                    return "IsNot"
                return "Is"
        return None

    def comparison(self) -> AstNode:
        left = self.arith()
        op_tok = self.tok
        op = self._cmp_op()
        if op is None:
            return left
        right = self.arith()
        save = self.i
        if self._cmp_op() is not None:
            self.i = save
            self.unsupported("chained comparison", op_tok)
        return node("Compare", left=left, op=node(op), right=right)

    def _check_binary_unsupported(self):
        if self.tok.kind == "OP" and self.tok.text in _UNSUPPORTED_OPS:
            self.unsupported(_UNSUPPORTED_OPS[self.tok.text])

    def arith(self) -> AstNode:
        left = self.term()
        while self.at_op("+", "-"):
            op = _BIN_OPS[self.advance().text]
            left = node("BinOp", left=left, op=node(op), right=self.term())
        self._check_binary_unsupported()
        return left

    def term(self) -> AstNode:
        left = self.factor()
        while self.at_op("*", "/", "%"):
            op = _BIN_OPS[self.advance().text]
            left = node("BinOp", left=left, op=node(op), right=self.factor())
        self._check_binary_unsupported()
        return left

    def factor(self) -> AstNode:
        if self.at_op("-", "+"):
            op = "USub" if self.advance().text == "-" else "UAdd"
            return node("UnaryOp", op=node(op), operand=self.factor())
        if self.at_op("~"):
            self.unsupported("bitwise inversion")
        if self.at_kw("await"):
            self.unsupported("await expression")
        e = self.primary()
        if self.at_op("**"):
            self.unsupported("power operator")
        return e

    def primary(self) -> AstNode:
        e = self.atom()
        while True:
            if self.at_op("."):
                self.advance()
                t = self.tok
                if t.kind != "NAME" or keyword.iskeyword(t.text):
                    self.fail("expected attribute name")
                self.advance()
                e = node("Attribute", value=e, attr=_ident(t.text))
            elif self.at_op("("):
                e = node("Call", func=e, args=self.call_args())
            elif self.at_op("["):
                e = node("Subscript", value=e, slice=self.subscript())
            else:
                return e

    def call_args(self) -> list[AstNode]:
        self.expect_op("(")
        args = []
        while not self.at_op(")"):
            if self.at_op("*", "**"):
                self.unsupported("starred call argument")
            if self.tok.kind == "NAME" and self.peek().kind == "OP" and self.peek().text == "=":
                self.unsupported("keyword argument")
            args.append(self.expression())
            if self.at_kw("for"):
                self.unsupported("generator expression")
            if self.at_op(","):
                self.advance()
            elif not self.at_op(")"):
                self.fail("expected ',' or ')' in call")
        self.advance()
        return args

    def subscript(self) -> AstNode:
        self.expect_op("[")
        if self.at_op("]"):
            self.fail("empty subscript")
        first = self.slice_item()
        if self.at_op(","):
            items = [first]
            while self.at_op(","):
                self.advance()
                if self.at_op("]"):
                    break
                items.append(self.slice_item())
            if any(x.constructor == "Slice" for x in items):
                self.unsupported("extended slicing")
            first = node("Tuple", elts=items)
        self.expect_op("]")
        return first

    def slice_item(self) -> AstNode:
        lower = None
        if not self.at_op(":"):
            lower = self.expression()
            if not self.at_op(":"):
                return lower
        self.expect_op(":")
        upper = step = None
        if not self.at_op(":", "]", ","):
            upper = self.expression()
        if self.at_op(":"):
            self.advance()
            if not self.at_op("]", ","):
                step = self.expression()

        def bound(x):
            return node("Omitted") if x is None else node("Bound", value=x)

        return node("Slice", lower=bound(lower), upper=bound(upper), step=bound(step))

    def atom(self) -> AstNode:
        t = self.tok
        if t.kind == "NAME":
            if t.text in ("None", "True", "False"):
                self.advance()
                return _const(t.text)
            if t.text in _UNSUPPORTED_KEYWORDS:
                self.unsupported(_UNSUPPORTED_KEYWORDS[t.text])
            if keyword.iskeyword(t.text):
                self.fail("unexpected keyword")
            self.advance()
            return node("Name", id=_ident(t.text))
        if t.kind == "NUMBER":
            self.advance()
            text = _number_text(t.text)
            if text is None:
                self.unsupported("non-finite float literal", t)
            return _const(text)
        if t.kind == "STRING":
            parts = []
            while self.tok.kind == "STRING":
                parts.append(self.advance())
            try:
                value = "".join(_pyast.literal_eval(p.text) for p in parts)
            except (ValueError, SyntaxError) as e:
                raise SurfaceSyntaxError(f"bad string literal ({e})", t.start) from None
            return _const(repr(value))
        if t.kind == "OP":
            if t.text == "(":
                return self.paren()
            if t.text == "[":
                return self.list_display()
            if t.text == "{":
                return self.brace_display()
            if t.text in _UNSUPPORTED_OPS:
                self.unsupported(_UNSUPPORTED_OPS[t.text])
        self.fail("expected an expression")

    def paren(self) -> AstNode:
        self.advance()
        if self.at_op(")"):
            self.advance()
            return node("Tuple", elts=[])
        if self.at_kw("yield"):
            self.unsupported("yield expression")
        first = self.expression()
        if self.at_kw("for"):
            self.unsupported("generator expression")
        if self.at_op(")"):
            self.advance()
            return first
        elts = [first]
        while self.at_op(","):
            self.advance()
            if self.at_op(")"):
                break
            elts.append(self.expression())
        self.expect_op(")")
        return node("Tuple", elts=elts)

    def list_display(self) -> AstNode:
        self.advance()
        if self.at_op("]"):
            self.advance()
            return node("List", elts=[])
        first = self.expression()
        if self.at_kw("for", "async"):
            gens = self.comprehensions()
            self.expect_op("]")
            return node("ListComp", elt=first, generators=gens)
        elts = [first]
        while self.at_op(","):
            self.advance()
            if self.at_op("]"):
                break
            elts.append(self.expression())
        self.expect_op("]")
        return node("List", elts=elts)

    def brace_display(self) -> AstNode:
        self.advance()
        if self.at_op("}"):
            self.advance()
            return node("Dict", entries=[])
        if self.at_op("**"):
            self.unsupported("dict unpacking")
        key = self.expression()
        if not self.at_op(":"):
            self.unsupported("set display")
        self.advance()
        value = self.expression()
        if self.at_kw("for", "async"):
            gens = self.comprehensions()
            self.expect_op("}")
            return node("DictComp", key=key, value=value, generators=gens)
        entries = [node("KeyValue", key=key, value=value)]
        while self.at_op(","):
            self.advance()
            if self.at_op("}"):
                break
            if self.at_op("**"):
                self.unsupported("dict unpacking")
            k = self.expression()
            self.expect_op(":")
            entries.append(node("KeyValue", key=k, value=self.expression()))
        self.expect_op("}")
        return node("Dict", entries=entries)

    def comprehensions(self) -> list[AstNode]:
        gens = []
        while self.at_kw("for", "async"):
            if self.at_kw("async"):
                self.unsupported("async comprehension")
            self.advance()
            start = self.tok.start
            target = self.comp_target()
            _check_target(target, start)
            if not self.at_kw("in"):
                self.fail("expected 'in'")
            self.advance()
            it = self.disjunction()
            ifs = []
            while self.at_kw("if"):
                self.advance()
                ifs.append(self.disjunction())
            gens.append(node("Comprehension", target=target, iter=it, ifs=ifs))
        return gens

    def comp_target(self) -> AstNode:
        first = self.arith()
        if not self.at_op(","):
            return first
        elts = [first]
        while self.at_op(","):
            self.advance()
            if self.at_kw("in"):
                break
            elts.append(self.arith())
        return node("Tuple", elts=elts)


def _assignable(t: AstNode) -> bool:
    if t.constructor in ("Name", "Attribute", "Subscript"):
        return True
    if t.constructor in ("Tuple", "List"):
        return all(_assignable(e) for e in t["elts"])
    return False


def _check_target(t: AstNode, pos: int) -> None:
    if not _assignable(t):
        raise SurfaceSyntaxError(f"cannot assign to {t.constructor}", pos)


def parse_code(text: str, mode: str = "auto") -> AstNode:
    """Parse one line of mini-Python.

    ``mode="stmt"`` always returns a statement node (bare expressions are
    wrapped in ``Expr``); ``"expr"`` requires an expression and returns it;
    ``"auto"`` returns the expression for expression statements and the
    statement node otherwise.
    """
    if mode not in ("auto", "stmt", "expr"):
        raise ValueError(f"unknown parse mode {mode!r}")
    stmt = _Parser(text).statement()
    if mode == "stmt":
        return stmt
    if stmt.constructor == "Expr":
        return stmt["value"]
    if mode == "expr":
        raise SurfaceSyntaxError(f"expected an expression, got {stmt.constructor}", 0)
    return stmt


def is_valid_code(text: str) -> bool:
    try:
        parse_code(text)
    except SurfaceError:
        return False
    return True


# ---------------------------------------------------------------------------
# printer

LAMBDA, OR, AND, NOT, CMP, ARITH, TERM, FACTOR, POSTFIX, ATOM = 0, 1, 2, 3, 4, 5, 6, 7, 9, 10

_OP_TEXT = {"Add": "+", "Sub": "-", "Mult": "*", "Div": "/", "Mod": "%"}
_CMP_TEXT = {"Eq": "==", "NotEq": "!=", "Lt": "<", "LtE": "<=", "Gt": ">", "GtE": ">=",
             "In": "in", "NotIn": "not in", "Is": "is", "IsNot": "is not"}
_UNARY_TEXT = {"Not": "not ", "UAdd": "+", "USub": "-"}
_STMTS = ("Assign", "AugAssign", "Expr")


def _leaf(v, type_: str) -> str:
    if not isinstance(v, PrimitiveValue) or v.type != type_:
        raise UnprintableError(f"expected a {type_} value, got {v!r}")
    if not is_valid_primitive(type_, v.text):
        raise UnprintableError(f"{v.text!r} is not a printable {type_}")
    return v.text


def _op_name(t, table: dict) -> str:
    if not isinstance(t, AstNode) or t.constructor not in table or t.fields:
        raise UnprintableError(f"unknown operator {t!r}")
    return t.constructor


def _prec(t: AstNode) -> int:
    c = t.constructor
    if c == "Lambda":
        return LAMBDA
    if c == "BoolOp":
        return OR if _op_name(t["op"], {"Or": 0, "And": 0}) == "Or" else AND
    if c == "UnaryOp":
        return NOT if _op_name(t["op"], _UNARY_TEXT) == "Not" else FACTOR
    if c == "Compare":
        return CMP
    if c == "BinOp":
        return ARITH if _op_name(t["op"], _OP_TEXT) in ("Add", "Sub") else TERM
    if c in ("Call", "Attribute", "Subscript"):
        return POSTFIX
    return ATOM


def _expr(t, min_prec: int = LAMBDA) -> str:
    if not isinstance(t, AstNode):
        raise UnprintableError(f"expected an expression node, got {t!r}")
    text = _expr_body(t)
    if _prec(t) < min_prec:
        return f"({text})"
    return text


def _items(v) -> tuple:
    if not isinstance(v, tuple):
        raise UnprintableError("starred field does not hold a list")
    return v


def _expr_body(t: AstNode) -> str:
    c = t.constructor
    if c == "Name":
        return _leaf(t["id"], "identifier")
    if c == "Constant":
        return _leaf(t["value"], "constant")
    if c == "BoolOp":
        p = _prec(t)
        word = " or " if p == OR else " and "
        return _expr(t["left"], p) + word + _expr(t["right"], p + 1)
    if c == "BinOp":
        p = _prec(t)
        op = _OP_TEXT[_op_name(t["op"], _OP_TEXT)]
        return f"{_expr(t['left'], p)} {op} {_expr(t['right'], p + 1)}"
    if c == "UnaryOp":
        op = _op_name(t["op"], _UNARY_TEXT)
        return _UNARY_TEXT[op] + _expr(t["operand"], _prec(t))
    if c == "Compare":
        op = _CMP_TEXT[_op_name(t["op"], _CMP_TEXT)]
        return f"{_expr(t['left'], ARITH)} {op} {_expr(t['right'], ARITH)}"
    if c == "Lambda":
        return _lambda(t)
    if c == "Call":
        args = ", ".join(_expr(a) for a in _items(t["args"]))
        return f"{_expr(t['func'], POSTFIX)}({args})"
    if c == "Attribute":
        value = t["value"]
        inner = _expr(value, POSTFIX)
        if isinstance(value, AstNode) and value.constructor == "Constant" and inner.isdigit():
            inner = f"({inner})"
        return f"{inner}.{_leaf(t['attr'], 'identifier')}"
    if c == "Subscript":
        return f"{_expr(t['value'], POSTFIX)}[{_subscript(t['slice'])}]"
    if c == "List":
        return "[" + ", ".join(_expr(e) for e in _items(t["elts"])) + "]"
    if c == "Tuple":
        elts = _items(t["elts"])
        if len(elts) == 1:
            return f"({_expr(elts[0])},)"
        return "(" + ", ".join(_expr(e) for e in elts) + ")"
    if c == "Dict":
        parts = []
        for e in _items(t["entries"]):
            if not isinstance(e, AstNode) or e.constructor != "KeyValue":
                raise UnprintableError(f"dict entry {e!r} is not a KeyValue")
            parts.append(f"{_expr(e['key'], OR)}: {_expr(e['value'])}")
        return "{" + ", ".join(parts) + "}"
    if c == "ListComp":
        return f"[{_expr(t['elt'])}{_comprehensions(t['generators'])}]"
    if c == "DictComp":
        return (f"{{{_expr(t['key'], OR)}: {_expr(t['value'])}"
                f"{_comprehensions(t['generators'])}}}")
    if c == "Slice":
        raise UnprintableError("Slice outside a subscript")
    if c in _STMTS:
        raise UnprintableError(f"statement {c} in expression position")
    raise UnprintableError(f"constructor {c} is outside the printable subset")


def _lambda(t: AstNode) -> str:
    params = []
    names = set()
    seen_default = False
    for a in _items(t["args"]):
        if not isinstance(a, AstNode) or a.constructor not in ("Arg", "ArgDefault"):
            raise UnprintableError(f"lambda parameter {a!r} is not an Arg")
        name = _leaf(a["name"], "identifier")
        if name in names:
            raise UnprintableError(f"duplicate lambda parameter {name!r}")
        names.add(name)
        if a.constructor == "ArgDefault":
            seen_default = True
            params.append(f"{name}={_expr(a['default'], OR)}")
        elif seen_default:
            raise UnprintableError("lambda parameter without default follows one with a default")
        else:
            params.append(name)
    head = "lambda " + ", ".join(params) if params else "lambda"
    return f"{head}: {_expr(t['body'])}"


def _subscript(s) -> str:
    if isinstance(s, AstNode) and s.constructor == "Slice":
        def bound(b) -> str:
            if not isinstance(b, AstNode) or b.constructor not in ("Omitted", "Bound"):
                raise UnprintableError(f"slice bound {b!r} is not Omitted/Bound")
            return "" if b.constructor == "Omitted" else _expr(b["value"], OR)

        text = f"{bound(s['lower'])}:{bound(s['upper'])}"
        if s["step"].constructor == "Bound":
            text += ":" + bound(s["step"])
        else:
            bound(s["step"])
        return text
    return _expr(s)


def _target(t, comp: bool = False) -> str:
    if not isinstance(t, AstNode) or not _assignable(t):
        name = t.constructor if isinstance(t, AstNode) else type(t).__name__
        raise UnprintableError(f"cannot assign to {name}")
    if comp and t.constructor == "Tuple" and len(t["elts"]) >= 2:
        return ", ".join(_expr(e, ARITH) for e in t["elts"])
    return _expr(t)


def _comprehensions(gens) -> str:
    gens = _items(gens)
    if not gens:
        raise UnprintableError("comprehension without a for clause")
    out = []
    for gen in gens:
        if not isinstance(gen, AstNode) or gen.constructor != "Comprehension":
            raise UnprintableError(f"{gen!r} is not a Comprehension")
        out.append(f" for {_target(gen['target'], comp=True)} in {_expr(gen['iter'], OR)}")
        out.extend(f" if {_expr(cond, OR)}" for cond in _items(gen["ifs"]))
    return "".join(out)


def unparse(t: AstNode) -> str:
    """Canonical source text for ``t`` (a statement or an expression node).

    Raises :class:`UnprintableError` for trees that fit the grammar but have
    no valid rendering (e.g. ``7 = x`` or an empty comprehension).
    """
    if not isinstance(t, AstNode):
        raise UnprintableError(f"expected an AST node, got {t!r}")
    c = t.constructor
    if c == "Assign":
        return f"{_target(t['target'])} = {_expr(t['value'])}"
    if c == "AugAssign":
        target = t["target"]
        if not isinstance(target, AstNode) or target.constructor not in ("Name", "Attribute", "Subscript"):
            raise UnprintableError("illegal target for augmented assignment")
        op = _OP_TEXT[_op_name(t["op"], _OP_TEXT)]
        return f"{_expr(target)} {op}= {_expr(t['value'])}"
    if c == "Expr":
        return _expr(t["value"])
    return _expr(t)


def canonicalize(text: str) -> str:
    """``unparse(parse_code(text))``."""
    return unparse(parse_code(text))
