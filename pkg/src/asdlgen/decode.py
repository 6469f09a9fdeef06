"""Grammar-masked beam search with pluggable scorers.

Scorers see only choice points.  At a PREDICT-shaped state they return a
log-probability per option (constructors and, when legal, ``CLOSE*``); at a
GENERATE-shaped state they return ``p_gen``, a distribution over vocabulary
texts and one over input positions, which :func:`combine_copy_gen` merges
into a distribution over values.  The decoder masks illegal options and
renormalizes before extending hypotheses.
"""

from __future__ import annotations

import json
import math
import random
import shlex
import subprocess
from abc import ABC, abstractmethod
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .grammar import Grammar
from .surface import is_valid_primitive
from .transition import (
    CLOSE_STAR,
    Action,
    ActionMask,
    Feasibility,
    GeneratorState,
    Limits,
    LimitExceeded,
    apply,
    auto_complete_trace,
    format_action,
    infer_root,
    initial_state,
    is_completion,
    legal_actions,
)
from .vocab import Vocabulary

__all__ = [
    "ScorerError",
    "DecodeError",
    "TokenMask",
    "ScoreRequest",
    "ScoreResponse",
    "Scorer",
    "UniformScorer",
    "RolloutScorer",
    "NgramScorer",
    "ExternalScorer",
    "combine_copy_gen",
    "step_distribution",
    "beam_search",
    "sample",
    "derivation_log_prob",
    "ngram_scorer_train",
    "token_beam_search",
    "token_sample",
    "DecodeResult",
    "EOS",
    "CLOSE_KEY",
]

EOS = "</s>"
BOS = "<s>"
CLOSE_KEY = "CLOSE*"
TOL = 1e-9


class ScorerError(ValueError):
    """A scorer response that breaks the response contract."""


class DecodeError(RuntimeError):
    pass


@dataclass(frozen=True)
class TokenMask:
    """Unconstrained mask for token mode: the whole code-token vocabulary."""

    vocab: tuple[str, ...]
    shape: str = "tokens"

    def to_json(self) -> dict:
        return {"shape": self.shape, "vocab": list(self.vocab)}


@dataclass
class ScoreRequest:
    state: GeneratorState | None
    choice_history: list
    input_tokens: list[str]
    mask: ActionMask | TokenMask

    def to_json(self) -> dict:
        hist = [format_action(a) if isinstance(a, Action) else a for a in self.choice_history]
        d = {"mask": self.mask.to_json(), "history": hist, "tokens": list(self.input_tokens)}
        if self.state is not None:
            d["stack"] = [str(r) for r in self.state.stack[1:]]
        return d


@dataclass
class ScoreResponse:
    logprobs: dict[str, float] | None = None
    p_gen: float | None = None
    gen_dist: dict[str, float] = field(default_factory=dict)
    copy_dist: dict[int, float] = field(default_factory=dict)
    close_logprob: float | None = None

    @classmethod
    def from_json(cls, d: dict) -> "ScoreResponse":
        return cls(
            logprobs=d.get("logprobs"),
            p_gen=d.get("p_gen"),
            gen_dist=dict(d.get("gen", {})),
            copy_dist={int(k): v for k, v in d.get("copy", {}).items()},
            close_logprob=d.get("close_logprob"),
        )

    def to_json(self) -> dict:
        d = {}
        if self.logprobs is not None:
            d["logprobs"] = self.logprobs
        if self.p_gen is not None:
            d["p_gen"] = self.p_gen
            d["gen"] = self.gen_dist
            d["copy"] = {str(k): v for k, v in self.copy_dist.items()}
        if self.close_logprob is not None:
            d["close_logprob"] = self.close_logprob
        return d


class Scorer(ABC):
    """Maps a :class:`ScoreRequest` to a :class:`ScoreResponse`.

    ``serial`` tells callers whether concurrent ``score`` calls are unsafe.
    """

    serial = True

    @abstractmethod
    def score(self, request: ScoreRequest) -> ScoreResponse:
        ...


# ---------------------------------------------------------------------------
# distribution arithmetic


def _check_dist(name: str, dist: dict, required: bool) -> None:
    if not dist:
        if required:
            raise ScorerError(f"{name} is empty but carries probability mass")
        return
    if any(p < 0 or p != p for p in dist.values()):
        raise ScorerError(f"{name} has negative or NaN entries")
    total = math.fsum(dist.values())
    if abs(total - 1.0) > TOL:
        raise ScorerError(f"{name} sums to {total!r}, not 1")


def combine_copy_gen(p_gen: float, gen_dist: dict, copy_dist: dict, input_tokens) -> dict:
    """Marginal over the generate and copy branches.

    ``p(v) = p_gen * gen_dist[v] + (1 - p_gen) * sum(copy_dist[j] for j with
    input_tokens[j] == v)``.
    """
    if not (0.0 <= p_gen <= 1.0):
        raise ScorerError(f"p_gen={p_gen!r} outside [0, 1]")
    _check_dist("gen_dist", gen_dist, p_gen > 0)
    _check_dist("copy_dist", copy_dist, p_gen < 1)
    if p_gen == 1.0:
        return dict(gen_dist)
    for j in copy_dist:
        if not 0 <= j < len(input_tokens):
            raise ScorerError(f"copy position {j} outside the input ({len(input_tokens)} tokens)")
    copied: dict[str, list[float]] = defaultdict(list)
    for j, p in copy_dist.items():
        copied[input_tokens[j]].append(p)
    out: dict[str, float] = {}
    if p_gen > 0:
        for v, p in gen_dist.items():
            out[v] = p_gen * p
    p_copy = 1.0 - p_gen
    for v, ps in copied.items():
        out[v] = out.get(v, 0.0) + p_copy * math.fsum(ps)
    return out


def _default_value_ok(type_: str, text: str) -> bool:
    if type_ in ("identifier", "constant"):
        return is_valid_primitive(type_, text)
    return bool(text)


def step_distribution(g: Grammar, scorer: Scorer, state: GeneratorState, history, tokens,
                      feasibility: Feasibility | None = None, n_choices: int = 0,
                      value_ok=_default_value_ok):
    """Masked, renormalized next-action distribution at a normalized state.

    Returns ``[(action, log_prob, next_state)]`` where ``next_state`` is
    already auto-completed.  Options that are illegal, carry an unprintable
    value, or (with ``feasibility``) can no longer finish within the limits
    are removed before renormalizing.
    """
    mask = legal_actions(g, state)
    resp = scorer.score(ScoreRequest(state, list(history), list(tokens), mask))
    raw: list[tuple[Action, float]] = []
    if mask.is_rule_shape:
        if resp.logprobs is None:
            raise ScorerError("rule-shaped request answered without logprobs")
        probs = {k: math.exp(v) for k, v in resp.logprobs.items()}
        _check_dist("rule distribution", probs, True)
        for a in mask.rule_actions():
            key = CLOSE_KEY if a == CLOSE_STAR else a.constructor
            raw.append((a, probs.get(key, 0.0)))
    else:
        if resp.p_gen is None:
            raise ScorerError("generate-shaped request answered without p_gen")
        if not resp.gen_dist and not resp.copy_dist:
            values = {}  # the scorer has no candidate value for this slot
        else:
            values = combine_copy_gen(resp.p_gen, resp.gen_dist, resp.copy_dist, tokens)
        p_close = 0.0
        if mask.allow_close:
            if resp.close_logprob is None:
                raise ScorerError("CLOSE* is legal but the response has no close_logprob")
            p_close = math.exp(resp.close_logprob)
            if p_close > 1 + TOL:
                raise ScorerError("close probability exceeds 1")
            p_close = min(p_close, 1.0)
            raw.append((CLOSE_STAR, p_close))
        for text, p in values.items():
            if value_ok(mask.primitive_type, text):
                raw.append((mask.value_action(text), (1.0 - p_close) * p))

    out = []
    for a, p in raw:
        if p <= 0:
            continue
        nxt, _ = auto_complete_trace(g, apply(g, state, a))
        if feasibility is not None and not feasibility.ok(nxt, n_choices + 1):
            continue
        out.append((a, p, nxt))
    z = math.fsum(p for _, p, _ in out)
    if z <= 0:
        return []
    return [(a, math.log(p / z), nxt) for a, p, nxt in out]


# ---------------------------------------------------------------------------
# search


@dataclass(frozen=True)
class DecodeResult:
    derivation: tuple[Action, ...]
    log_prob: float
    state: GeneratorState = field(repr=False, compare=False)

    @property
    def choices(self) -> tuple[Action, ...]:
        return tuple(a for a in self.derivation if not is_completion(a))

    @property
    def ast(self):
        return self.state.result


@dataclass(frozen=True)
class _Hyp:
    state: GeneratorState
    actions: tuple
    choices: tuple
    log_prob: float


def beam_search(g: Grammar, scorer: Scorer, input_tokens, beam_size: int = 15,
                limits: Limits | None = None, root: str | None = None,
                length_norm: bool = False, value_ok=_default_value_ok) -> list[DecodeResult]:
    """Top ``beam_size`` finished derivations, best first.

    Each step expands every live hypothesis by its masked distribution, keeps
    the best ``beam_size`` extensions (ties: insertion order) and retires
    those that reached the goal.  Hypotheses that could no longer finish
    within ``limits`` are never created.
    """
    if beam_size < 1:
        raise ValueError("beam_size must be >= 1")
    limits = limits or Limits()
    feas = Feasibility(g, limits)
    s0 = initial_state(g, root)
    if not feas.ok(s0, 0):
        raise LimitExceeded("no derivation fits within the limits")

    def rank(h: _Hyp) -> float:
        if length_norm:
            return h.log_prob / max(1, len(h.choices))
        return h.log_prob

    live = [_Hyp(s0, (), (), 0.0)]
    finished: list[_Hyp] = []
    while live and len(finished) < beam_size:
        cands = []
        for h in live:
            for a, lp, nxt in step_distribution(g, scorer, h.state, h.choices, input_tokens,
                                                feas, len(h.choices), value_ok):
                _, fired = auto_complete_trace(g, apply(g, h.state, a))
                cands.append(_Hyp(nxt, h.actions + (a,) + tuple(fired), h.choices + (a,),
                                  h.log_prob + lp))
        order = sorted(range(len(cands)), key=lambda i: (-rank(cands[i]), i))
        live = []
        for i in order[:beam_size]:
            h = cands[i]
            (finished if h.state.is_goal else live).append(h)
    if not finished:
        raise LimitExceeded("search ended without a finished hypothesis")
    finished.sort(key=lambda h: -rank(h))
    return [DecodeResult(h.actions, h.log_prob, h.state) for h in finished[:beam_size]]


def sample(g: Grammar, scorer: Scorer, input_tokens, rng: random.Random,
           limits: Limits | None = None, root: str | None = None,
           value_ok=_default_value_ok) -> DecodeResult:
    """Ancestral sample of one derivation from the masked distribution."""
    limits = limits or Limits()
    feas = Feasibility(g, limits)
    s = initial_state(g, root)
    if not feas.ok(s, 0):
        raise LimitExceeded("no derivation fits within the limits")
    actions: list[Action] = []
    choices: list[Action] = []
    lp_total = 0.0
    while not s.is_goal:
        dist = step_distribution(g, scorer, s, choices, input_tokens, feas, len(choices), value_ok)
        if not dist:
            raise DecodeError("sampling reached a state with no admissible action")
        r = rng.random()
        acc = 0.0
        pick = dist[-1]
        for item in dist:
            acc += math.exp(item[1])
            if r < acc:
                pick = item
                break
        a, lp, _ = pick
        s, fired = auto_complete_trace(g, apply(g, s, a))
        actions.append(a)
        actions.extend(fired)
        choices.append(a)
        lp_total += lp
    return DecodeResult(tuple(actions), lp_total, s)


def derivation_log_prob(g: Grammar, scorer: Scorer, input_tokens, actions,
                        root: str | None = None, value_ok=_default_value_ok) -> tuple[float, int]:
    """Teacher-forced log-probability of a derivation and its number of choices."""
    actions = list(actions)
    if root is None:
        root = infer_root(g, actions)
    s = initial_state(g, root)
    choices: list[Action] = []
    total = 0.0
    for a in actions:
        if is_completion(a):
            continue
        s, _ = auto_complete_trace(g, s)
        dist = step_distribution(g, scorer, s, choices, input_tokens, None, len(choices), value_ok)
        lp = next((lp for b, lp, _ in dist if b == a), None)
        if lp is None:
            return -math.inf, len(choices) + 1
        total += lp
        choices.append(a)
        s = apply(g, s, a)
    return total, len(choices)


# ---------------------------------------------------------------------------
# token mode


def _token_dist(scorer: Scorer, history, tokens, vocab) -> list[tuple[str, float]]:
    resp = scorer.score(ScoreRequest(None, list(history), list(tokens), TokenMask(tuple(vocab))))
    if resp.logprobs is None:
        raise ScorerError("token request answered without logprobs")
    probs = {k: math.exp(v) for k, v in resp.logprobs.items()}
    _check_dist("token distribution", probs, True)
    out = [(t, probs.get(t, 0.0)) for t in vocab]
    out = [(t, p) for t, p in out if p > 0]
    z = math.fsum(p for _, p in out)
    return [(t, math.log(p / z)) for t, p in out]


def token_beam_search(scorer: Scorer, input_tokens, vocab, beam_size: int = 15,
                      max_len: int = 64) -> list[tuple[list[str], float]]:
    """Unconstrained beam search over code tokens; results may be invalid code."""
    if beam_size < 1:
        raise ValueError("beam_size must be >= 1")
    vocab = tuple(vocab)
    if EOS not in vocab:
        vocab = vocab + (EOS,)
    live = [((), 0.0)]
    finished = []
    while live and len(finished) < beam_size:
        cands = []
        for toks, lp in live:
            for t, tlp in _token_dist(scorer, toks, input_tokens, vocab):
                cands.append((toks + (t,), lp + tlp))
        cands.sort(key=lambda c: -c[1])
        live = []
        for toks, lp in cands[:beam_size]:
            if toks[-1] == EOS:
                finished.append((list(toks[:-1]), lp))
            elif len(toks) >= max_len:
                finished.append((list(toks), lp))
            else:
                live.append((toks, lp))
    finished.sort(key=lambda c: -c[1])
    return finished[:beam_size]


def token_sample(scorer: Scorer, input_tokens, vocab, rng: random.Random,
                 max_len: int = 64) -> tuple[list[str], float]:
    vocab = tuple(vocab)
    if EOS not in vocab:
        vocab = vocab + (EOS,)
    toks: list[str] = []
    total = 0.0
    while len(toks) < max_len:
        dist = _token_dist(scorer, toks, input_tokens, vocab)
        r = rng.random()
        acc = 0.0
        t, lp = dist[-1]
        for item in dist:
            acc += math.exp(item[1])
            if r < acc:
                t, lp = item
                break
        total += lp
        if t == EOS:
            break
        toks.append(t)
    return toks, total


# ---------------------------------------------------------------------------
# reference scorers


def _log_uniform(keys) -> dict[str, float]:
    keys = list(keys)
    return {k: -math.log(len(keys)) for k in keys}


class UniformScorer(Scorer):
    """Uniform over the mask.  Values come from ``vocab`` plus, for copying,
    input tokens that are valid values of the dotted type."""

    serial = False

    def __init__(self, vocab: Vocabulary | None = None, token_vocab=()):
        self.vocab = vocab or Vocabulary()
        self.token_vocab = tuple(token_vocab)

    def score(self, request: ScoreRequest) -> ScoreResponse:
        mask = request.mask
        if isinstance(mask, TokenMask):
            return ScoreResponse(logprobs=_log_uniform(mask.vocab))
        if mask.is_rule_shape:
            keys = [CLOSE_KEY if a == CLOSE_STAR else a.constructor for a in mask.rule_actions()]
            return ScoreResponse(logprobs=_log_uniform(keys))
        type_ = mask.primitive_type
        gen = self.vocab.texts_of(type_)
        copy_pos = [j for j, t in enumerate(request.input_tokens)
                    if _default_value_ok(type_, t) and t not in gen]
        n = len(gen) + len(copy_pos)
        close = None
        if mask.allow_close:
            close = -math.log(n + 1)
        if n == 0:
            return ScoreResponse(p_gen=1.0, close_logprob=close)
        return ScoreResponse(
            p_gen=len(gen) / n,
            gen_dist={t: 1 / len(gen) for t in gen} if gen else {},
            copy_dist={j: 1 / len(copy_pos) for j in copy_pos} if copy_pos else {},
            close_logprob=close,
        )


class RolloutScorer(UniformScorer):
    """Random-rollout policy: constructors weighted by ``exp(-beta * cost)``
    where ``cost`` is the fewest choices that finish them, and ``CLOSE*``
    taken with probability ``close_bias`` whenever it is legal.

    Plain uniform choice over a recursive grammar grows trees until the
    action budget stops them; this keeps rollouts small but still reaches
    every constructor.
    """

    def __init__(self, grammar: Grammar, vocab: Vocabulary | None = None,
                 beta: float = 1.0, close_bias: float = 0.6):
        super().__init__(vocab)
        if not 0 < close_bias < 1:
            raise ValueError("close_bias must lie strictly between 0 and 1")
        feas = Feasibility(grammar, Limits())
        self._cost = {p.constructor: 1 + sum(feas.field_cost(f) for f in p.fields)
                      for p in grammar.productions}
        self.beta = beta
        self.close_bias = close_bias

    def score(self, request: ScoreRequest) -> ScoreResponse:
        mask = request.mask
        if isinstance(mask, TokenMask) or not mask.is_rule_shape:
            resp = super().score(request)
            if resp.close_logprob is not None:
                resp.close_logprob = math.log(self.close_bias)
            return resp
        ctors = sorted(mask.constructors)
        w = {c: math.exp(-self.beta * self._cost[c]) for c in ctors}
        z = math.fsum(w.values())
        scale = 1.0 - self.close_bias if mask.allow_close else 1.0
        out = {c: math.log(scale * w[c] / z) for c in ctors}
        if mask.allow_close:
            out[CLOSE_KEY] = math.log(self.close_bias)
        return ScoreResponse(logprobs=out)


def _action_key(a: Action | None) -> str:
    if a is None:
        return BOS
    if a.constructor is not None:
        return f"{a.kind}:{a.constructor}"
    return a.kind


def _dotted_key(mask: ActionMask) -> str:
    return mask.symbol + ("*" if mask.allow_close else "")


class NgramScorer(Scorer):
    """Add-one smoothed counts of the next choice given the previous choice
    and the dotted symbol.  Also holds a token bigram model for token mode."""

    serial = False

    def __init__(self, rule_counts=None, value_counts=None, close_counts=None,
                 vocab: Vocabulary | None = None, n_gen: int = 0, n_copyable: int = 0,
                 token_counts=None, token_vocab=()):
        self.rule_counts: dict[str, Counter] = defaultdict(Counter, rule_counts or {})
        self.value_counts: dict[str, Counter] = defaultdict(Counter, value_counts or {})
        self.close_counts: dict[str, Counter] = defaultdict(Counter, close_counts or {})
        self.vocab = vocab or Vocabulary()
        self.n_gen = n_gen
        self.n_copyable = n_copyable
        self.token_counts: dict[str, Counter] = defaultdict(Counter, token_counts or {})
        self.token_vocab = tuple(token_vocab)

    @property
    def p_gen(self) -> float:
        return (self.n_gen - self.n_copyable + 1) / (self.n_gen + 2)

    def _context(self, request: ScoreRequest) -> str:
        prev = request.choice_history[-1] if request.choice_history else None
        return f"{_action_key(prev)}|{_dotted_key(request.mask)}"

    def score(self, request: ScoreRequest) -> ScoreResponse:
        mask = request.mask
        if isinstance(mask, TokenMask):
            prev = request.choice_history[-1] if request.choice_history else BOS
            counts = self.token_counts.get(prev, Counter())
            total = sum(counts[t] for t in mask.vocab) + len(mask.vocab)
            return ScoreResponse(
                logprobs={t: math.log((counts[t] + 1) / total) for t in mask.vocab})
        ctx = self._context(request)
        if mask.is_rule_shape:
            keys = [CLOSE_KEY if a == CLOSE_STAR else a.constructor for a in mask.rule_actions()]
            counts = self.rule_counts.get(ctx, Counter())
            total = sum(counts[k] for k in keys) + len(keys)
            return ScoreResponse(logprobs={k: math.log((counts[k] + 1) / total) for k in keys})

        type_ = mask.primitive_type
        close = None
        if mask.allow_close:
            cc = self.close_counts.get(ctx, Counter())
            close = math.log((cc["close"] + 1) / (cc["close"] + cc["gen"] + 2))
        texts = self.vocab.texts_of(type_)
        vocab_set = set(texts)
        copy_pos = [j for j, t in enumerate(request.input_tokens) if t in vocab_set]
        if not texts:
            return ScoreResponse(p_gen=1.0, close_logprob=close)
        counts = self.value_counts.get(ctx, Counter())
        total = sum(counts[t] for t in texts) + len(texts)
        gen = {t: (counts[t] + 1) / total for t in texts}
        if not copy_pos:
            return ScoreResponse(p_gen=1.0, gen_dist=gen, close_logprob=close)
        return ScoreResponse(
            p_gen=self.p_gen,
            gen_dist=gen,
            copy_dist={j: 1 / len(copy_pos) for j in copy_pos},
            close_logprob=close,
        )

    def to_json(self) -> dict:
        return {
            "rule_counts": {k: dict(v) for k, v in self.rule_counts.items()},
            "value_counts": {k: dict(v) for k, v in self.value_counts.items()},
            "close_counts": {k: dict(v) for k, v in self.close_counts.items()},
            "vocab": [{"type": v.type, "text": v.text, "count": c} for v, c in self.vocab],
            "n_gen": self.n_gen,
            "n_copyable": self.n_copyable,
            "token_counts": {k: dict(v) for k, v in self.token_counts.items()},
            "token_vocab": list(self.token_vocab),
        }

    @classmethod
    def from_json(cls, d: dict) -> "NgramScorer":
        from .tree import PrimitiveValue

        vocab = Vocabulary([(PrimitiveValue(e["type"], e["text"]), e["count"]) for e in d["vocab"]])
        return cls(
            rule_counts={k: Counter(v) for k, v in d["rule_counts"].items()},
            value_counts={k: Counter(v) for k, v in d["value_counts"].items()},
            close_counts={k: Counter(v) for k, v in d["close_counts"].items()},
            vocab=vocab,
            n_gen=d["n_gen"],
            n_copyable=d["n_copyable"],
            token_counts={k: Counter(v) for k, v in d.get("token_counts", {}).items()},
            token_vocab=d.get("token_vocab", ()),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f, ensure_ascii=False)

    @classmethod
    def load(cls, path) -> "NgramScorer":
        with open(path, encoding="utf-8") as f:
            return cls.from_json(json.load(f))


def ngram_scorer_train(corpus, grammar: Grammar | None = None,
                       vocab: Vocabulary | None = None, code_tokens=None) -> NgramScorer:
    """Count-based scorer from ``(intent_tokens, derivation)`` pairs.

    ``vocab`` defaults to every generated value in the corpus.  ``code_tokens``
    (one token list per example) trains the token-mode bigram model.
    """
    from .grammar import bundled_grammar
    from .vocab import build_vocab

    corpus = list(corpus)
    if not corpus:
        raise ValueError("cannot train on an empty corpus")
    g = grammar or bundled_grammar()
    if vocab is None:
        vocab = build_vocab([d for _, d in corpus])
    sc = NgramScorer(vocab=vocab)
    for tokens, actions in corpus:
        token_set = set(tokens)
        actions = list(actions)
        s = initial_state(g, infer_root(g, actions))
        prev = None
        for a in actions:
            if is_completion(a):
                continue
            s, _ = auto_complete_trace(g, s)
            mask = legal_actions(g, s)
            ctx = f"{_action_key(prev)}|{_dotted_key(mask)}"
            if mask.is_rule_shape:
                sc.rule_counts[ctx][CLOSE_KEY if a == CLOSE_STAR else a.constructor] += 1
            elif a == CLOSE_STAR:
                sc.close_counts[ctx]["close"] += 1
            else:
                if mask.allow_close:
                    sc.close_counts[ctx]["gen"] += 1
                sc.value_counts[ctx][a.value.text] += 1
                sc.n_gen += 1
                if a.value.text in token_set:
                    sc.n_copyable += 1
            s = apply(g, s, a)
            prev = a
    if code_tokens is not None:
        seen: dict[str, None] = {}
        for toks in code_tokens:
            seq = [BOS, *toks, EOS]
            for x, y in zip(seq, seq[1:]):
                sc.token_counts[x][y] += 1
            for t in toks:
                seen.setdefault(t, None)
        sc.token_vocab = tuple(seen) + (EOS,)
    return sc


class ExternalScorer(Scorer):
    """Scorer served by a subprocess speaking JSON lines on stdin/stdout.

    One request object per line in, one response object per line out; see
    :meth:`ScoreRequest.to_json` and :meth:`ScoreResponse.from_json`.
    """

    serial = True

    def __init__(self, command, token_vocab=()):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                     text=True, bufsize=1)
        self.token_vocab = tuple(token_vocab)

    def score(self, request: ScoreRequest) -> ScoreResponse:
        if self.proc.poll() is not None:
            raise ScorerError(f"external scorer exited with status {self.proc.returncode}")
        self.proc.stdin.write(json.dumps(request.to_json(), ensure_ascii=False) + "\n")
        self.proc.stdin.flush()
        line = self.proc.stdout.readline()
        if not line:
            raise ScorerError("external scorer closed its output")
        try:
            return ScoreResponse.from_json(json.loads(line))
        except (json.JSONDecodeError, AttributeError, TypeError) as e:
            raise ScorerError(f"malformed scorer response: {e}") from None

    def close(self) -> None:
        if self.proc.poll() is None:
            self.proc.stdin.close()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
