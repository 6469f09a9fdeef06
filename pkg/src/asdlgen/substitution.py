"""Placeholder substitution of user names (``var_i``) and list literals (``lst_i``).

Backquoted spans in an intent become placeholders; the same originals are
then replaced token-wise in the code, and generated code is mapped back.
A list/tuple slot stands for the *contents* of the display, so
``[a, b, c, d]`` in code becomes ``[lst_0]`` and back again.
"""

from __future__ import annotations

import builtins
import json
import keyword
import re
from dataclasses import dataclass

from .surface import SurfaceError, lex, parse_code

__all__ = [
    "Slot",
    "SlotMap",
    "normalize_intent",
    "normalize_code",
    "denormalize_code",
    "substitute_tokens",
    "detect_slots",
    "intent_tokens",
]

_SPAN_RE = re.compile(r"`([^`]+)`")
_PLACEHOLDER_RE = re.compile(r"\b(var|lst)_(\d+)\b")
_BRACKETS = {"[": "]", "(": ")"}


@dataclass(frozen=True)
class Slot:
    placeholder: str
    original: str
    kind: str  # "var" or "lst"


@dataclass(frozen=True)
class SlotMap:
    entries: tuple[Slot, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def get(self, placeholder: str) -> Slot | None:
        for s in self.entries:
            if s.placeholder == placeholder:
                return s
        return None

    def to_json(self) -> list[dict]:
        return [{"placeholder": s.placeholder, "original": s.original, "kind": s.kind}
                for s in self.entries]

    @classmethod
    def from_json(cls, items) -> "SlotMap":
        return cls(tuple(Slot(d["placeholder"], d["original"], d["kind"]) for d in items))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False)


def _span_kind(span: str) -> str:
    try:
        t = parse_code(span, mode="expr")
    except SurfaceError:
        return "var"
    return "lst" if t.constructor in ("List", "Tuple") else "var"


def normalize_intent(intent: str) -> tuple[str, SlotMap]:
    """Replace each backquoted span by ``var_i`` / ``lst_i``, numbering per kind."""
    slots: dict[str, Slot] = {}
    counters = {"var": 0, "lst": 0}

    def sub(m: re.Match) -> str:
        span = m.group(1)
        if span not in slots:
            kind = _span_kind(span)
            slots[span] = Slot(f"{kind}_{counters[kind]}", span, kind)
            counters[kind] += 1
        return slots[span].placeholder

    text = _SPAN_RE.sub(sub, intent)
    return text, SlotMap(tuple(slots.values()))


def _token_texts(text: str):
    toks = lex(text)[:-1]
    return toks, [t.text for t in toks]


def _replace_slot(code: str, slot: Slot) -> str:
    try:
        _, pat = _token_texts(slot.original)
    except SurfaceError:
        return code
    if not pat:
        return code
    toks, texts = _token_texts(code)
    edits = []  # (start_char, end_char)
    i = 0
    while i <= len(texts) - len(pat):
        if texts[i:i + len(pat)] != pat:
            i += 1
            continue
        j = i + len(pat)
        if len(pat) == 1 and i > 0 and texts[i - 1] == "." and toks[i].kind == "NAME":
            i += 1  # attribute name, not a variable
            continue
        if slot.kind == "lst" and pat[0] in _BRACKETS and pat[-1] == _BRACKETS[pat[0]]:
            if len(pat) == 2:
                edits.append((toks[i].end, toks[j - 1].start))
            else:
                edits.append((toks[i + 1].start, toks[j - 2].end))
        else:
            edits.append((toks[i].start, toks[j - 1].end))
        i = j
    for a, b in reversed(edits):
        code = code[:a] + slot.placeholder + code[b:]
    return code


def normalize_code(code: str, slots: SlotMap) -> str:
    """Replace every occurrence of each slot original by its placeholder.

    Replacement is token-exact and never reaches inside string literals unless
    the literal itself is the original.  Slots whose replacement would break
    parsing are skipped.
    """
    parse_code(code)
    ordered = sorted(slots, key=lambda s: -len(s.original))
    for slot in ordered:
        candidate = _replace_slot(code, slot)
        if candidate == code:
            continue
        try:
            parse_code(candidate)
        except SurfaceError:
            continue
        code = candidate
    return code


def substitute_tokens(code: str, slots: SlotMap) -> str:
    """Lenient token replacement for code outside the parseable subset.

    Same matching rules as :func:`normalize_code` without the parse checks;
    text the lexer rejects is returned unchanged.
    """
    try:
        lex(code)
    except SurfaceError:
        return code
    for slot in sorted(slots, key=lambda s: -len(s.original)):
        code = _replace_slot(code, slot)
    return code


def denormalize_code(code: str, slots: SlotMap, diagnostics: list | None = None) -> str:
    """Substitute placeholders back.  Unknown placeholders stay verbatim and are
    appended to ``diagnostics`` when a list is supplied."""
    try:
        toks = lex(code)[:-1]
    except SurfaceError:
        toks = None

    if toks is None:
        def sub(m):
            slot = slots.get(m.group())
            if slot is None:
                if diagnostics is not None:
                    diagnostics.append(f"no slot for placeholder {m.group()}")
                return m.group()
            return slot.original

        return _PLACEHOLDER_RE.sub(sub, code)

    edits = []
    for k, t in enumerate(toks):
        if t.kind != "NAME" or not _PLACEHOLDER_RE.fullmatch(t.text):
            continue
        slot = slots.get(t.text)
        if slot is None:
            if diagnostics is not None:
                diagnostics.append(f"no slot for placeholder {t.text} at column {t.start + 1}")
            continue
        a, b = t.start, t.end
        orig = slot.original.strip()
        if (slot.kind == "lst" and orig[:1] in _BRACKETS and 0 < k < len(toks) - 1
                and toks[k - 1].text == orig[0] and toks[k + 1].text == _BRACKETS[orig[0]]):
            a, b = toks[k - 1].start, toks[k + 1].end
        edits.append((a, b, slot.original))
    for a, b, text in reversed(edits):
        code = code[:a] + text + code[b:]
    return code


_WORD_RE = re.compile(r"[^\W\d]\w*")
_BUILTINS = frozenset(dir(builtins))


def intent_tokens(intent: str) -> list[str]:
    """Whitespace/punctuation split used for decoder inputs."""
    return re.findall(r"[^\W\d]\w*|\d+(?:\.\d+)?|'[^']*'|\"[^\"]*\"|\S", intent)


def detect_slots(intent: str, code: str) -> tuple[str, str, SlotMap]:
    """Unquoted variable detection for line-aligned corpora.

    Identifiers used as variables in ``code`` that also occur as whole words
    in ``intent`` become ``var`` slots, numbered by first appearance in the
    intent.  Keywords and builtins are never slotted.  Returns the normalized
    intent, normalized code and the map.
    """
    try:
        toks = lex(code)[:-1]
    except SurfaceError:
        return intent, code, SlotMap()
    names = set()
    for k, t in enumerate(toks):
        if t.kind != "NAME" or keyword.iskeyword(t.text) or t.text in _BUILTINS:
            continue
        if k > 0 and toks[k - 1].text == ".":
            continue
        names.add(t.text)
    found = []
    for m in _WORD_RE.finditer(intent):
        w = m.group()
        if w in names and w not in found:
            found.append(w)
    slots = SlotMap(tuple(Slot(f"var_{i}", w, "var") for i, w in enumerate(found)))
    new_intent = intent
    for slot in sorted(slots, key=lambda s: -len(s.original)):
        new_intent = re.sub(rf"(?<![\w.]){re.escape(slot.original)}(?!\w)",
                            slot.placeholder, new_intent)
    try:
        new_code = normalize_code(code, slots)
    except SurfaceError:
        new_code = substitute_tokens(code, slots)
    return new_intent, new_code, slots
