"""Conversions between derivations (action lists) and ASTs."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .grammar import Grammar
from .transition import (
    CLOSE_STAR,
    COMPLETE,
    COMPLETE_STAR,
    Action,
    TransitionError,
    auto_complete_trace,
    apply,
    generate,
    generate_star,
    initial_state,
    is_completion,
    predict,
    predict_star,
    replay,
    infer_root,
)
from .tree import AstNode, PrimitiveValue

__all__ = [
    "AstShapeError",
    "Diagnostic",
    "derivation_to_ast",
    "ast_to_derivation",
    "validate_ast",
    "choice_sequence",
    "full_derivation",
    "ast_to_json",
    "ast_from_json",
    "dumps_ast",
    "loads_ast",
]


class AstShapeError(ValueError):
    """An AST that does not fit the grammar."""


@dataclass(frozen=True)
class Diagnostic:
    path: str
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.path or '<root>'}: {self.kind}: {self.message}"


def derivation_to_ast(g: Grammar, actions, root: str | None = None) -> AstNode:
    s = replay(g, actions, root=root)
    if not s.is_goal:
        raise TransitionError("derivation is incomplete: replay did not reach the goal")
    return s.result


def validate_ast(g: Grammar, t, root: str | None = None) -> list[Diagnostic]:
    """Every way ``t`` departs from the grammar, one diagnostic per violation."""
    out: list[Diagnostic] = []
    if not isinstance(t, AstNode):
        return [Diagnostic("", "type", f"expected an AST node, got {type(t).__name__}")]
    if root is not None and g.has_constructor(t.constructor):
        lhs = g.production(t.constructor).lhs
        if lhs != root:
            out.append(Diagnostic("", "type", f"{t.constructor} builds {lhs}, expected {root}"))
    _check_node(g, t, "", out)
    return out


def _check_node(g: Grammar, t: AstNode, path: str, out: list[Diagnostic]) -> None:
    if not g.has_constructor(t.constructor):
        out.append(Diagnostic(path, "constructor", f"unknown constructor {t.constructor!r}"))
        return
    prod = g.production(t.constructor)
    given = dict(t.fields)
    if len(given) != len(t.fields):
        out.append(Diagnostic(path, "arity", f"repeated field label in {t.constructor}"))
    expected = {f.label for f in prod.fields}
    for label in given:
        if label not in expected:
            out.append(Diagnostic(f"{path}.{label}", "arity",
                                  f"{t.constructor} has no field {label!r}"))
    order = [k for k in t.labels if k in expected]
    if order != [f.label for f in prod.fields if f.label in given]:
        out.append(Diagnostic(path, "order", f"fields of {t.constructor} out of order"))
    for f in prod.fields:
        fpath = f"{path}.{f.label}"
        if f.label not in given:
            out.append(Diagnostic(fpath, "arity", f"missing field {f.label!r} of {t.constructor}"))
            continue
        v = given[f.label]
        if f.star:
            if not isinstance(v, (tuple, list)):
                out.append(Diagnostic(fpath, "qualifier",
                                      f"starred field {f.label!r} must hold a list"))
                continue
            for i, item in enumerate(v):
                _check_value(g, f.symbol, item, f"{fpath}[{i}]", out)
        else:
            if isinstance(v, (tuple, list)):
                out.append(Diagnostic(fpath, "qualifier",
                                      f"single field {f.label!r} holds a list"))
                continue
            _check_value(g, f.symbol, v, fpath, out)


def _check_value(g: Grammar, symbol: str, v, path: str, out: list[Diagnostic]) -> None:
    if g.is_primitive(symbol):
        if not isinstance(v, PrimitiveValue):
            out.append(Diagnostic(path, "type", f"expected a {symbol} value"))
        elif v.type != symbol:
            out.append(Diagnostic(path, "type", f"expected a {symbol} value, got {v.type}"))
        return
    if not isinstance(v, AstNode):
        out.append(Diagnostic(path, "type", f"expected a {symbol} node"))
        return
    if g.has_constructor(v.constructor) and g.production(v.constructor).lhs != symbol:
        lhs = g.production(v.constructor).lhs
        out.append(Diagnostic(path, "type", f"{v.constructor} builds {lhs}, expected {symbol}"))
        return
    _check_node(g, v, path, out)


def ast_to_derivation(g: Grammar, t: AstNode, root: str | None = None) -> list[Action]:
    """Full canonical derivation of ``t``, completions included.

    ``root`` defaults to the nonterminal ``t``'s constructor builds.
    """
    diags = validate_ast(g, t, root)
    if diags:
        raise AstShapeError("; ".join(map(str, diags)))
    out: list[Action] = []
    _emit(g, t, False, out)
    # the last completion is the goal step, not part of the derivation
    if out and out[-1] in (COMPLETE, COMPLETE_STAR):
        out.pop()
    return out


def _emit(g: Grammar, t: AstNode, in_star: bool, out: list[Action]) -> None:
    out.append(predict_star(t.constructor) if in_star else predict(t.constructor))
    prod = g.production(t.constructor)
    for f in prod.fields:
        v = t[f.label]
        if g.is_primitive(f.symbol):
            if f.star:
                out.extend(generate_star(x.type, x.text) for x in v)
                out.append(CLOSE_STAR)
            else:
                out.append(generate(v.type, v.text))
        elif f.star:
            for child in v:
                _emit(g, child, True, out)
            out.append(CLOSE_STAR)
        else:
            _emit(g, v, False, out)
    out.append(COMPLETE_STAR if in_star else COMPLETE)


def choice_sequence(actions) -> list[Action]:
    """Drop the deterministic COMPLETE/COMPLETE* actions."""
    return [a for a in actions if not is_completion(a)]


def full_derivation(g: Grammar, actions, root: str | None = None) -> list[Action]:
    """Normalize a (possibly completion-free) derivation to canonical full form."""
    actions = list(actions)
    if root is None:
        root = infer_root(g, actions)
    s = initial_state(g, root)
    out: list[Action] = []
    for a in choice_sequence(actions):
        s, fired = auto_complete_trace(g, s)
        out.extend(fired)
        s = apply(g, s, a)
        out.append(a)
    s, fired = auto_complete_trace(g, s)
    out.extend(fired)
    return out


# ---------------------------------------------------------------------------
# JSON


def ast_to_json(t):
    if isinstance(t, PrimitiveValue):
        return {"prim": t.type, "text": t.text}
    if isinstance(t, tuple):
        return [ast_to_json(x) for x in t]
    return {"ctor": t.constructor, "fields": {k: ast_to_json(v) for k, v in t.fields}}


def ast_from_json(d):
    if isinstance(d, list):
        return tuple(ast_from_json(x) for x in d)
    if "prim" in d:
        return PrimitiveValue(d["prim"], d["text"])
    return AstNode(d["ctor"], tuple((k, ast_from_json(v)) for k, v in d.get("fields", {}).items()))


def dumps_ast(t: AstNode, **kw) -> str:
    return json.dumps(ast_to_json(t), ensure_ascii=False, **kw)


def loads_ast(text: str) -> AstNode:
    return ast_from_json(json.loads(text))
