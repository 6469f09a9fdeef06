"""Load CoNaLa-style and Django-style pair files into :class:`Example` records."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from .derivation import ast_to_derivation, derivation_to_ast
from .grammar import Grammar, bundled_grammar
from .substitution import (
    SlotMap,
    detect_slots,
    normalize_code,
    normalize_intent,
    substitute_tokens,
)
from .surface import SurfaceError, parse_code, unparse
from .transition import Action, action_from_json, action_to_json

__all__ = [
    "Example",
    "IngestError",
    "IngestStats",
    "load_conala",
    "load_django",
    "make_example",
    "save_examples",
    "load_examples",
]

log = logging.getLogger(__name__)

PROVENANCES = ("curated", "mined", "django")


class IngestError(ValueError):
    pass


@dataclass
class Example:
    intent: str
    normalized_intent: str
    code: str
    normalized_code: str
    slot_map: SlotMap = field(default_factory=SlotMap)
    derivation: tuple[Action, ...] | None = None
    provenance: str = "curated"
    note: str | None = None  # why derivation is absent

    @property
    def in_subset(self) -> bool:
        return self.derivation is not None

    def to_json(self) -> dict:
        return {
            "intent": self.intent,
            "normalized_intent": self.normalized_intent,
            "code": self.code,
            "normalized_code": self.normalized_code,
            "slot_map": self.slot_map.to_json(),
            "derivation": None if self.derivation is None
            else [action_to_json(a) for a in self.derivation],
            "provenance": self.provenance,
            "note": self.note,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Example":
        deriv = d.get("derivation")
        return cls(
            intent=d["intent"],
            normalized_intent=d["normalized_intent"],
            code=d["code"],
            normalized_code=d["normalized_code"],
            slot_map=SlotMap.from_json(d.get("slot_map", [])),
            derivation=None if deriv is None else tuple(action_from_json(a) for a in deriv),
            provenance=d.get("provenance", "curated"),
            note=d.get("note"),
        )


@dataclass
class IngestStats:
    loaded: int = 0
    in_subset: int = 0
    out_of_subset: int = 0
    skipped: int = 0
    errors: list[str] = field(default_factory=list)


def _attach_derivation(ex: Example, g: Grammar) -> Example:
    try:
        tree = parse_code(ex.normalized_code, mode="stmt")
    except SurfaceError as e:
        ex.note = f"{type(e).__name__}: {e}"
        return ex
    actions = ast_to_derivation(g, tree)
    # load-time round-trip check
    rebuilt = unparse(derivation_to_ast(g, actions))
    if rebuilt != unparse(tree):
        raise IngestError(f"round trip changed {ex.normalized_code!r} into {rebuilt!r}")
    ex.derivation = tuple(actions)
    return ex


def make_example(intent: str, code: str, provenance: str = "curated",
                 grammar: Grammar | None = None, detect: bool = False) -> Example:
    """Normalize one pair and derive it when the code is inside the surface subset.

    ``detect`` uses unquoted variable detection instead of backquoted spans.
    """
    if provenance not in PROVENANCES:
        raise IngestError(f"unknown provenance {provenance!r}")
    g = grammar or bundled_grammar()
    if detect:
        n_intent, n_code, slots = detect_slots(intent, code)
    else:
        n_intent, slots = normalize_intent(intent)
        try:
            n_code = normalize_code(code, slots)
        except SurfaceError:
            n_code = substitute_tokens(code, slots)
    ex = Example(intent, n_intent, code, n_code, slots, provenance=provenance)
    return _attach_derivation(ex, g)


def _read_records(path):
    with open(path, encoding="utf-8") as f:
        text = f.read()
    stripped = text.lstrip()
    if stripped.startswith("["):
        data = json.loads(text)
        return [(i + 1, rec) for i, rec in enumerate(data)]
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append((lineno, json.loads(line)))
        except json.JSONDecodeError as e:
            out.append((lineno, e))
    return out


def load_conala(path, strict: bool = False, provenance: str = "curated",
                grammar: Grammar | None = None, stats: IngestStats | None = None) -> list[Example]:
    """Records with ``intent``, ``rewritten_intent`` (nullable) and ``snippet``.

    The rewritten intent is preferred when present.  Malformed records are
    skipped and counted in ``stats``, or raise in strict mode.  Snippets
    outside the surface subset are kept with ``derivation=None``.
    """
    stats = stats if stats is not None else IngestStats()
    out = []
    for where, rec in _read_records(path):
        problem = None
        if isinstance(rec, Exception):
            problem = f"invalid JSON: {rec}"
        elif not isinstance(rec, dict):
            problem = "record is not an object"
        else:
            intent = rec.get("rewritten_intent") or rec.get("intent")
            snippet = rec.get("snippet")
            if not isinstance(intent, str) or not isinstance(snippet, str):
                problem = "missing intent or snippet"
        if problem:
            msg = f"{path}:{where}: {problem}"
            if strict:
                raise IngestError(msg)
            log.warning("skipping %s", msg)
            stats.skipped += 1
            stats.errors.append(msg)
            continue
        ex = make_example(intent, snippet, provenance, grammar)
        out.append(ex)
        stats.loaded += 1
        if ex.in_subset:
            stats.in_subset += 1
        else:
            stats.out_of_subset += 1
    return out


def load_django(nl_path, code_path, grammar: Grammar | None = None,
                stats: IngestStats | None = None) -> list[Example]:
    """Line-aligned comment/code files; variables found by comparing both sides."""
    stats = stats if stats is not None else IngestStats()
    with open(nl_path, encoding="utf-8") as f:
        nl = f.read().splitlines()
    with open(code_path, encoding="utf-8") as f:
        code = f.read().splitlines()
    if len(nl) != len(code):
        raise IngestError(f"{nl_path} has {len(nl)} lines but {code_path} has {len(code)}")
    out = []
    for intent, snippet in zip(nl, code):
        ex = make_example(intent, snippet.strip(), "django", grammar, detect=True)
        out.append(ex)
        stats.loaded += 1
        if ex.in_subset:
            stats.in_subset += 1
        else:
            stats.out_of_subset += 1
    return out


def save_examples(examples, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for ex in examples:
            f.write(json.dumps(ex.to_json(), ensure_ascii=False) + "\n")


def load_examples(path) -> list[Example]:
    with open(path, encoding="utf-8") as f:
        return [Example.from_json(json.loads(line)) for line in f if line.strip()]
