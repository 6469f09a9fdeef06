"""Primitive-value vocabulary collected from training derivations."""

from __future__ import annotations

import json
from collections import Counter
from types import MappingProxyType

from .transition import GENERATE, GENERATE_STAR
from .tree import PrimitiveValue

__all__ = ["Vocabulary", "build_vocab", "contains", "with_placeholders", "PLACEHOLDER_TYPE"]

PLACEHOLDER_TYPE = "identifier"


class Vocabulary:
    """Frozen ``(PrimitiveValue, count)`` entries in descending-count order."""

    def __init__(self, entries=()):
        self._entries = tuple((PrimitiveValue(v.type, v.text), int(c)) for v, c in entries)
        index = {}
        for i, (v, c) in enumerate(self._entries):
            if c < 1:
                raise ValueError(f"count for {v!r} must be >= 1")
            if (v.type, v.text) in index:
                raise ValueError(f"duplicate vocabulary entry {v!r}")
            index[(v.type, v.text)] = i
        self._index = MappingProxyType(index)
        by_type: dict[str, list[PrimitiveValue]] = {}
        for v, _ in self._entries:
            by_type.setdefault(v.type, []).append(v)
        self._by_type = {k: tuple(v) for k, v in by_type.items()}

    @property
    def entries(self) -> tuple[tuple[PrimitiveValue, int], ...]:
        return self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __contains__(self, p: PrimitiveValue) -> bool:
        return (p.type, p.text) in self._index

    def count(self, p: PrimitiveValue) -> int:
        i = self._index.get((p.type, p.text))
        return 0 if i is None else self._entries[i][1]

    def values_of(self, type_: str) -> tuple[PrimitiveValue, ...]:
        return self._by_type.get(type_, ())

    def texts_of(self, type_: str) -> tuple[str, ...]:
        return tuple(v.text for v in self.values_of(type_))

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self._entries == other._entries

    def __repr__(self) -> str:
        return f"Vocabulary({len(self)} entries)"

    def dumps(self) -> str:
        return "".join(
            json.dumps({"type": v.type, "text": v.text, "count": c}, ensure_ascii=False) + "\n"
            for v, c in self._entries
        )

    @classmethod
    def loads(cls, text: str) -> "Vocabulary":
        items = []
        for line in text.splitlines():
            if line.strip():
                d = json.loads(line)
                items.append((PrimitiveValue(d["type"], d["text"]), d["count"]))
        return cls(items)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.dumps())

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as f:
            return cls.loads(f.read())


def build_vocab(derivations, min_count: int = 1) -> Vocabulary:
    """Count every GENERATE/GENERATE* value; keep those seen ``min_count`` times.

    Order is descending count, ties broken by first occurrence.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: Counter = Counter()
    first: dict[PrimitiveValue, int] = {}
    for d in derivations:
        for a in d:
            if a.kind in (GENERATE, GENERATE_STAR):
                counts[a.value] += 1
                first.setdefault(a.value, len(first))
    kept = [(v, c) for v, c in counts.items() if c >= min_count]
    kept.sort(key=lambda vc: (-vc[1], first[vc[0]]))
    return Vocabulary(kept)


def contains(v: Vocabulary, p: PrimitiveValue) -> bool:
    return p in v


def with_placeholders(v: Vocabulary, n: int = 10, type_: str = PLACEHOLDER_TYPE) -> Vocabulary:
    """Append ``var_0..var_{n-1}`` and ``lst_0..lst_{n-1}`` (count 1) when absent."""
    extra = []
    for kind in ("var", "lst"):
        for i in range(n):
            p = PrimitiveValue(type_, f"{kind}_{i}")
            if p not in v:
                extra.append((p, 1))
    return Vocabulary(list(v.entries) + extra)
