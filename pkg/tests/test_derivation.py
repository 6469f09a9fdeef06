import json

import pytest

from asdlgen.derivation import (
    AstShapeError,
    ast_from_json,
    ast_to_derivation,
    ast_to_json,
    choice_sequence,
    derivation_to_ast,
    dumps_ast,
    full_derivation,
    loads_ast,
    validate_ast,
)
from asdlgen.surface import parse_code
from asdlgen.transition import (
    CLOSE_STAR,
    TransitionError,
    format_action,
    generate,
    predict,
    replay,
)
from asdlgen.tree import node, prim

from conftest import WORKED_TRACE, WORKED_TREE, snippets


def test_worked_derivation(toy):
    acts = ast_to_derivation(toy, WORKED_TREE)
    assert [format_action(a) for a in acts] == WORKED_TRACE
    assert derivation_to_ast(toy, acts) == WORKED_TREE
    assert validate_ast(toy, WORKED_TREE) == []


def test_smallest_derivation(toy):
    acts = [predict("Constant"), generate("constant", "7")]
    t = derivation_to_ast(toy, acts)
    assert t == node("Constant", value=prim("constant", "7"))
    assert ast_to_derivation(toy, t) == acts


def test_empty_star(toy):
    t = node("List", elts=[])
    assert ast_to_derivation(toy, t) == [predict("List"), CLOSE_STAR]


def test_incomplete_derivation(toy):
    with pytest.raises(TransitionError, match="incomplete"):
        derivation_to_ast(toy, [predict("List")])


def test_validate_missing_field(toy):
    t = node("BinOp", left=node("Constant", value=prim("constant", "1")), op=node("Add"))
    (d,) = validate_ast(toy, t)
    assert (d.path, d.kind) == (".right", "arity")


def test_validate_star_holding_node(toy):
    t = node("List", elts=node("Constant", value=prim("constant", "1")))
    (d,) = validate_ast(toy, t)
    assert d.kind == "qualifier" and d.path == ".elts"


def test_validate_more_violations(toy):
    bad = node("List", elts=[node("Nope"), node("Add")])
    kinds = sorted(d.kind for d in validate_ast(toy, bad))
    assert kinds == ["constructor", "type"]
    paths = sorted(d.path for d in validate_ast(toy, bad))
    assert paths == [".elts[0]", ".elts[1]"]
    swapped = node("BinOp", op=node("Add"), left=node("Constant", value=prim("constant", "1")),
                   right=node("Constant", value=prim("constant", "2")))
    assert [d.kind for d in validate_ast(toy, swapped)] == ["order"]
    assert validate_ast(toy, node("Constant", value=prim("identifier", "x")))[0].kind == "type"


def test_ast_to_derivation_rejects_bad_shape(toy):
    with pytest.raises(AstShapeError):
        ast_to_derivation(toy, node("List", elts=node("Add")))


def test_round_trips_over_corpus(mini):
    for s in snippets():
        t = parse_code(s, mode="stmt")
        d = ast_to_derivation(mini, t)
        assert derivation_to_ast(mini, d) == t
        assert ast_to_derivation(mini, derivation_to_ast(mini, d)) == d
        # scorer-facing projection expands back to the full form
        assert full_derivation(mini, choice_sequence(d)) == d
        assert replay(mini, choice_sequence(d)) == replay(mini, d)


def test_json_codec(toy):
    j = ast_to_json(WORKED_TREE)
    assert j["ctor"] == "List"
    assert j["fields"]["elts"][1] == {"ctor": "Constant",
                                      "fields": {"value": {"prim": "constant", "text": "4"}}}
    assert ast_from_json(json.loads(json.dumps(j))) == WORKED_TREE
    assert loads_ast(dumps_ast(WORKED_TREE)) == WORKED_TREE


def test_primitive_equality_is_textual():
    assert prim("constant", "7") != prim("constant", "7.0")
