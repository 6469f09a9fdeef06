"""Earley-style generator: a stack of dotted rules driven by eight actions.

The bottom of every stack is a pseudo-root rule ``⊤ → • root`` (``root`` is
the grammar axiom unless overridden).  START(C) is therefore just a PREDICT
applied to the pseudo-root, and the goal state is the pseudo-root with its
dot at the end.  Completing the user's root rule into the pseudo-root is the
GOAL step and is never serialized as a COMPLETE action.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from functools import lru_cache

from .grammar import Field, Grammar, GrammarError, Production
from .tree import AstNode, PrimitiveValue

__all__ = [
    "TransitionError",
    "IllegalActionError",
    "PrimitiveTypeError",
    "ReplayError",
    "LimitExceeded",
    "due_completion",
    "Action",
    "predict",
    "predict_star",
    "generate",
    "generate_star",
    "COMPLETE",
    "COMPLETE_STAR",
    "CLOSE_STAR",
    "DottedRule",
    "GeneratorState",
    "ActionMask",
    "Limits",
    "Feasibility",
    "initial_state",
    "legal_actions",
    "apply",
    "auto_complete",
    "auto_complete_trace",
    "replay",
    "infer_root",
    "format_action",
    "parse_action",
    "dump_derivation",
    "load_derivation",
    "action_to_json",
    "action_from_json",
    "is_completion",
]

PSEUDO_ROOT = "⊤"


class TransitionError(Exception):
    pass


class IllegalActionError(TransitionError):
    pass


class PrimitiveTypeError(IllegalActionError):
    pass


class LimitExceeded(TransitionError):
    pass


class ReplayError(TransitionError):
    def __init__(self, index: int, cause: Exception):
        self.index = index
        self.cause = cause
        super().__init__(f"action {index}: {cause}")


# ---------------------------------------------------------------------------
# actions

PREDICT = "PREDICT"
PREDICT_STAR = "PREDICT*"
GENERATE = "GENERATE"
GENERATE_STAR = "GENERATE*"
COMPLETE_KIND = "COMPLETE"
COMPLETE_STAR_KIND = "COMPLETE*"
CLOSE_STAR_KIND = "CLOSE*"

_KINDS = (PREDICT, PREDICT_STAR, GENERATE, GENERATE_STAR,
          COMPLETE_KIND, COMPLETE_STAR_KIND, CLOSE_STAR_KIND)


@dataclass(frozen=True)
class Action:
    kind: str
    constructor: str | None = None
    value: PrimitiveValue | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown action kind {self.kind!r}")
        needs_ctor = self.kind in (PREDICT, PREDICT_STAR)
        needs_value = self.kind in (GENERATE, GENERATE_STAR)
        if needs_ctor != (self.constructor is not None) or needs_value != (self.value is not None):
            raise ValueError(f"malformed {self.kind} action")

    def __str__(self) -> str:
        return format_action(self)

    __repr__ = __str__


def predict(constructor: str) -> Action:
    return Action(PREDICT, constructor=constructor)


def predict_star(constructor: str) -> Action:
    return Action(PREDICT_STAR, constructor=constructor)


def generate(type_: str, text) -> Action:
    return Action(GENERATE, value=PrimitiveValue(type_, str(text)))


def generate_star(type_: str, text) -> Action:
    return Action(GENERATE_STAR, value=PrimitiveValue(type_, str(text)))


COMPLETE = Action(COMPLETE_KIND)
COMPLETE_STAR = Action(COMPLETE_STAR_KIND)
CLOSE_STAR = Action(CLOSE_STAR_KIND)


def is_completion(a: Action) -> bool:
    return a.kind in (COMPLETE_KIND, COMPLETE_STAR_KIND)


def format_action(a: Action) -> str:
    if a.constructor is not None:
        return f"{a.kind} {a.constructor}"
    if a.value is not None:
        return f"{a.kind} {a.value.type} {json.dumps(a.value.text, ensure_ascii=False)}"
    return a.kind


def parse_action(line: str) -> Action:
    """Inverse of :func:`format_action`.  ``START C`` is read as ``PREDICT C``."""
    line = line.strip()
    kind, _, rest = line.partition(" ")
    rest = rest.strip()
    if kind == "START":
        kind = PREDICT
    if kind in (PREDICT, PREDICT_STAR):
        if not rest or " " in rest:
            raise ValueError(f"bad action line: {line!r}")
        return Action(kind, constructor=rest)
    if kind in (GENERATE, GENERATE_STAR):
        type_, _, quoted = rest.partition(" ")
        try:
            text = json.loads(quoted)
        except json.JSONDecodeError:
            raise ValueError(f"bad quoted value in action line: {line!r}") from None
        if not type_ or not isinstance(text, str):
            raise ValueError(f"bad action line: {line!r}")
        return Action(kind, value=PrimitiveValue(type_, text))
    if kind in (COMPLETE_KIND, COMPLETE_STAR_KIND, CLOSE_STAR_KIND) and not rest:
        return Action(kind)
    raise ValueError(f"bad action line: {line!r}")


def action_to_json(a: Action) -> dict:
    d: dict = {"action": a.kind}
    if a.constructor is not None:
        d["ctor"] = a.constructor
    if a.value is not None:
        d["type"] = a.value.type
        d["text"] = a.value.text
    return d


def action_from_json(d: dict) -> Action:
    kind = d["action"]
    if kind == "START":
        kind = PREDICT
    if "ctor" in d:
        return Action(kind, constructor=d["ctor"])
    if "text" in d:
        return Action(kind, value=PrimitiveValue(d["type"], d["text"]))
    return Action(kind)


def dump_derivation(actions, fmt: str = "lines") -> str:
    if fmt == "lines":
        return "".join(format_action(a) + "\n" for a in actions)
    if fmt == "jsonl":
        return "".join(json.dumps(action_to_json(a), ensure_ascii=False) + "\n" for a in actions)
    raise ValueError(f"unknown derivation format {fmt!r}")


def load_derivation(text: str) -> list[Action]:
    """Read either serialization; the format is sniffed per line."""
    out = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("{"):
            out.append(action_from_json(json.loads(line)))
        else:
            out.append(parse_action(line))
    return out


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class DottedRule:
    production: Production
    dot: int = 0
    children: tuple = ()
    star_buffer: tuple = ()

    @property
    def complete(self) -> bool:
        return self.dot == len(self.production.fields)

    @property
    def dotted_field(self) -> Field | None:
        f = self.production.fields
        return f[self.dot] if self.dot < len(f) else None

    def __str__(self) -> str:
        fields = self.production.fields
        syms = [f.symbol + ("*" if f.star else "") for f in fields]
        done = []
        for f, child in zip(fields[: self.dot], self.children):
            done.extend([f.symbol] * len(child) if f.star else [f.symbol])
        dotted = self.dotted_field
        if dotted is not None and dotted.star:
            done.extend([dotted.symbol] * len(self.star_buffer))
        parts = done + ["•"] + syms[self.dot:]
        return f"{self.production.lhs} → {' '.join(parts)}"


@dataclass(frozen=True)
class GeneratorState:
    stack: tuple[DottedRule, ...]

    @property
    def status(self) -> str:
        if len(self.stack) == 1 and self.stack[0].complete:
            return "goal"
        return "running"

    @property
    def is_goal(self) -> bool:
        return self.status == "goal"

    @property
    def top(self) -> DottedRule:
        return self.stack[-1]

    @property
    def depth(self) -> int:
        """Number of real rules on the stack (pseudo-root excluded)."""
        return len(self.stack) - 1

    @property
    def root_symbol(self) -> str:
        return self.stack[0].production.fields[0].symbol

    @property
    def result(self) -> AstNode:
        if not self.is_goal:
            raise TransitionError("state has not reached the goal")
        return self.stack[0].children[0]

    def format_stack(self) -> str:
        rules = [str(r) for r in self.stack[1:]]
        if not rules:
            return "⟨" + str(self.stack[0]) + "⟩"
        return "⟨" + " | ".join(rules) + "⟩"


@dataclass(frozen=True)
class ActionMask:
    """The legal choices at a normalized running state.

    ``shape`` is one of ``predict`` (dot on B), ``predict_star`` (B*),
    ``generate`` (t) or ``generate_star`` (t*).  Generate masks are open
    class: any value of ``primitive_type`` is legal.
    """

    shape: str
    symbol: str
    constructors: tuple[str, ...] = ()
    allow_close: bool = False

    @property
    def primitive_type(self) -> str | None:
        return self.symbol if self.shape in ("generate", "generate_star") else None

    @property
    def is_rule_shape(self) -> bool:
        return self.shape in ("predict", "predict_star")

    def __contains__(self, a: Action) -> bool:
        if a.kind == CLOSE_STAR_KIND:
            return self.allow_close
        if self.shape == "predict":
            return a.kind == PREDICT and a.constructor in self.constructors
        if self.shape == "predict_star":
            return a.kind == PREDICT_STAR and a.constructor in self.constructors
        if self.shape == "generate":
            return a.kind == GENERATE and a.value.type == self.symbol
        return a.kind == GENERATE_STAR and a.value.type == self.symbol

    def rule_actions(self) -> list[Action]:
        """Finite part of the mask: every PREDICT/PREDICT* plus CLOSE* when legal."""
        if self.shape == "predict":
            acts = [predict(c) for c in self.constructors]
        elif self.shape == "predict_star":
            acts = [predict_star(c) for c in self.constructors]
        else:
            acts = []
        if self.allow_close:
            acts.append(CLOSE_STAR)
        return acts

    def value_action(self, text: str) -> Action:
        kind = GENERATE if self.shape == "generate" else GENERATE_STAR
        return Action(kind, value=PrimitiveValue(self.symbol, text))

    def describe(self) -> str:
        if self.is_rule_shape:
            return "{" + ", ".join(map(str, self.rule_actions())) + "}"
        star = "*" if self.shape == "generate_star" else ""
        extra = ", CLOSE*" if self.allow_close else ""
        return f"{{GENERATE{star}(<{self.symbol}>){extra}}}"

    def to_json(self) -> dict:
        return {
            "shape": self.shape,
            "symbol": self.symbol,
            "constructors": list(self.constructors),
            "allow_close": self.allow_close,
        }


@dataclass(frozen=True)
class Limits:
    max_depth: int = 64
    max_actions: int = 512


def initial_state(g: Grammar, root: str | None = None) -> GeneratorState:
    root = g.axiom if root is None else root
    if root not in g.nonterminals:
        raise GrammarError(f"root symbol {root!r} is not a nonterminal")
    pseudo = Production(PSEUDO_ROOT, PSEUDO_ROOT, (Field(root, "root"),))
    return GeneratorState((DottedRule(pseudo),))


def legal_actions(g: Grammar, s: GeneratorState) -> ActionMask:
    if s.is_goal:
        raise TransitionError("no legal actions: state is at the goal")
    top = s.top
    f = top.dotted_field
    if f is None:
        raise TransitionError("state not normalized: completed rule on top of the stack")
    if g.is_primitive(f.symbol):
        return ActionMask("generate_star" if f.star else "generate", f.symbol, (), f.star)
    ctors = tuple(p.constructor for p in g.constructors_for(f.symbol))
    return ActionMask("predict_star" if f.star else "predict", f.symbol, ctors, f.star)


def due_completion(s: GeneratorState) -> Action | None:
    """The completion the top of the stack requires, if it is finished."""
    if len(s.stack) < 2 or not s.top.complete:
        return None
    return COMPLETE_STAR if s.stack[-2].dotted_field.star else COMPLETE


def _complete(s: GeneratorState, a: Action) -> GeneratorState:
    due = due_completion(s)
    if due is None:
        raise IllegalActionError(f"{a.kind} requires a completed rule on top of the stack")
    if a.kind != due.kind:
        raise IllegalActionError(f"{a.kind} illegal here; the parent expects {due.kind}")
    top, parent = s.stack[-1], s.stack[-2]
    labels = [f.label for f in top.production.fields]
    built = AstNode(top.production.constructor, tuple(zip(labels, top.children)))
    if due is COMPLETE_STAR:
        new_parent = replace(parent, star_buffer=parent.star_buffer + (built,))
    else:
        new_parent = replace(parent, dot=parent.dot + 1, children=parent.children + (built,))
    return GeneratorState(s.stack[:-2] + (new_parent,))


def apply(g: Grammar, s: GeneratorState, a: Action) -> GeneratorState:
    """Return the successor of ``s`` under ``a``; ``s`` is left untouched."""
    if s.is_goal:
        raise IllegalActionError(f"{a} applied to a goal state")
    if is_completion(a):
        return _complete(s, a)
    mask = legal_actions(g, s)
    if a.value is not None and mask.primitive_type is not None and a.kind in (GENERATE, GENERATE_STAR):
        if a.value.type != mask.primitive_type:
            raise PrimitiveTypeError(
                f"value of type {a.value.type!r} where {mask.primitive_type!r} is expected"
            )
        if a.value.type not in g.primitives:
            raise PrimitiveTypeError(f"{a.value.type!r} is not a primitive of the grammar")
    if a not in mask:
        raise IllegalActionError(f"{a} is not legal; expected one of {mask.describe()}")

    top = s.top
    kind = a.kind
    if kind in (PREDICT, PREDICT_STAR):
        return GeneratorState(s.stack + (DottedRule(g.production(a.constructor)),))
    if kind == GENERATE:
        new_top = replace(top, dot=top.dot + 1, children=top.children + (a.value,))
    elif kind == GENERATE_STAR:
        new_top = replace(top, star_buffer=top.star_buffer + (a.value,))
    else:  # CLOSE*
        new_top = replace(top, dot=top.dot + 1, children=top.children + (top.star_buffer,),
                          star_buffer=())
    return GeneratorState(s.stack[:-1] + (new_top,))


def auto_complete_trace(g: Grammar, s: GeneratorState) -> tuple[GeneratorState, list[Action]]:
    """Like :func:`auto_complete`, also returning the completions fired.

    The final completion into the pseudo-root is the goal step and is not
    included in the returned list.
    """
    fired = []
    while True:
        due = due_completion(s)
        if due is None:
            return s, fired
        s = _complete(s, due)
        if not s.is_goal:
            fired.append(due)


def auto_complete(g: Grammar, s: GeneratorState) -> GeneratorState:
    return auto_complete_trace(g, s)[0]


def infer_root(g: Grammar, actions) -> str:
    """Root symbol implied by a derivation: the lhs of its START constructor."""
    for a in actions:
        if a.kind == PREDICT and g.has_constructor(a.constructor):
            return g.production(a.constructor).lhs
        break
    return g.axiom


def replay(g: Grammar, actions, root: str | None = None,
           limits: Limits | None = None) -> GeneratorState:
    """Fold ``actions`` over the initial state.

    Completion actions may be present (full derivation) or omitted (choice
    sequence); missing completions are applied lazily before the next choice.
    """
    actions = list(actions)
    if root is None:
        root = infer_root(g, actions)
    s = initial_state(g, root)
    n_choices = 0
    for i, a in enumerate(actions):
        try:
            if not is_completion(a):
                s = auto_complete(g, s)
                n_choices += 1
            s = apply(g, s, a)
            if limits is not None:
                if s.depth > limits.max_depth:
                    raise LimitExceeded(f"stack depth {s.depth} exceeds {limits.max_depth}")
                if n_choices > limits.max_actions:
                    raise LimitExceeded(f"more than {limits.max_actions} choice actions")
        except (TransitionError, GrammarError) as e:
            raise ReplayError(i, e) from e
    return auto_complete(g, s)


# ---------------------------------------------------------------------------
# completability under limits


class Feasibility:
    """Lower bounds used to keep only hypotheses that can still finish.

    ``min_height[B]`` is the least stack depth a B subtree needs;
    ``min_cost[B]`` the least number of choice actions to build one.
    """

    def __init__(self, g: Grammar, limits: Limits | None = None):
        self.g = g
        self.limits = limits or Limits()
        self.min_height, self.min_cost = _grammar_bounds(g)
        self._cache: dict = {}

    def field_cost(self, f: Field) -> float:
        if f.star or self.g.is_primitive(f.symbol):
            return 1
        return self.min_cost[f.symbol]

    def _field_height(self, f: Field) -> float:
        if f.star or self.g.is_primitive(f.symbol):
            return 0
        return self.min_height[f.symbol]

    def _suffix(self, r: DottedRule, skip: bool) -> tuple[float, float]:
        """(cost, height) still owed by ``r``.

        Below the top, a non-star dotted field is the one being expanded by
        the rule above it, which already accounts for it; ``skip`` drops it.
        """
        key = (r.production, r.dot, skip)
        hit = self._cache.get(key)
        if hit is None:
            fields = r.production.fields[r.dot:]
            if skip and fields and not fields[0].star:
                fields = fields[1:]
            hit = (sum(self.field_cost(f) for f in fields),
                   max((self._field_height(f) for f in fields), default=0))
            self._cache[key] = hit
        return hit

    def remaining_cost(self, s: GeneratorState) -> float:
        last = len(s.stack) - 1
        return sum(self._suffix(r, i < last)[0] for i, r in enumerate(s.stack))

    def required_depth(self, s: GeneratorState) -> float:
        last = len(s.stack) - 1
        need = s.depth
        for i, r in enumerate(s.stack):
            need = max(need, i + self._suffix(r, i < last)[1])
        return need

    def ok(self, s: GeneratorState, n_choices: int) -> bool:
        """Can ``s``, reached after ``n_choices`` choices, still finish within limits?"""
        if s.is_goal:
            return n_choices <= self.limits.max_actions
        return (self.required_depth(s) <= self.limits.max_depth
                and n_choices + self.remaining_cost(s) <= self.limits.max_actions)


@lru_cache(maxsize=32)
def _grammar_bounds(g: Grammar):
    height = {nt: math.inf for nt in g.nonterminals}
    cost = {nt: math.inf for nt in g.nonterminals}

    def h(f):
        return 0 if (f.star or g.is_primitive(f.symbol)) else height[f.symbol]

    def c(f):
        return 1 if (f.star or g.is_primitive(f.symbol)) else cost[f.symbol]

    changed = True
    while changed:
        changed = False
        for p in g.productions:
            ph = 1 + max((h(f) for f in p.fields), default=0)
            pc = 1 + sum(c(f) for f in p.fields)
            if ph < height[p.lhs]:
                height[p.lhs] = ph
                changed = True
            if pc < cost[p.lhs]:
                cost[p.lhs] = pc
                changed = True
    return height, cost
