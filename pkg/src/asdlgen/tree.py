"""Immutable AST values shared by the transition system and the codecs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

__all__ = ["PrimitiveValue", "AstNode", "FieldValue", "node", "prim"]


@dataclass(frozen=True)
class PrimitiveValue:
    """A leaf: the text of a value together with its primitive type.

    Equality is by ``(type, text)``; ``"7"`` and ``"7.0"`` are different values.
    """

    type: str
    text: str

    def __repr__(self) -> str:
        return f"{self.type}:{self.text}"


FieldValue = Union["AstNode", PrimitiveValue, tuple]


@dataclass(frozen=True)
class AstNode:
    constructor: str
    fields: tuple[tuple[str, FieldValue], ...] = ()

    def __getitem__(self, label: str) -> FieldValue:
        for k, v in self.fields:
            if k == label:
                return v
        raise KeyError(label)

    def get(self, label: str, default=None):
        try:
            return self[label]
        except KeyError:
            return default

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.fields)

    def __repr__(self) -> str:
        if not self.fields:
            return self.constructor
        parts = []
        for k, v in self.fields:
            if isinstance(v, tuple):
                parts.append(f"{k}=[{', '.join(map(repr, v))}]")
            else:
                parts.append(f"{k}={v!r}")
        return f"{self.constructor}({', '.join(parts)})"

    def walk(self):
        """Yield every node in pre-order, including ``self``."""
        yield self
        for _, v in self.fields:
            items = v if isinstance(v, tuple) else (v,)
            for item in items:
                if isinstance(item, AstNode):
                    yield from item.walk()


def _freeze(v):
    if isinstance(v, list):
        return tuple(_freeze(x) for x in v)
    return v


def node(constructor: str, **fields) -> AstNode:
    """Shorthand: ``node("Name", id=prim("identifier", "x"))``. Lists become tuples."""
    return AstNode(constructor, tuple((k, _freeze(v)) for k, v in fields.items()))


def prim(type_: str, text) -> PrimitiveValue:
    return PrimitiveValue(type_, str(text))
