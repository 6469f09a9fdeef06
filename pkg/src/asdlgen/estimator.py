"""scikit-learn style wrapper: intents in, code strings out."""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_consistent_length, check_is_fitted

from .decode import EOS, beam_search, ngram_scorer_train, token_beam_search
from .evaluation import exact_match
from .grammar import Grammar, bundled_grammar
from .ingest import make_example
from .substitution import SlotMap, denormalize_code, intent_tokens, normalize_intent
from .surface import SurfaceError, tokenize_code, unparse
from .transition import Limits, LimitExceeded
from .vocab import build_vocab, with_placeholders

__all__ = ["GrammarCodeGenerator", "check_text_array"]


def check_text_array(X, name: str = "X") -> list[str]:
    """Validate a 1-d sequence of strings and return it as a list."""
    if isinstance(X, str):
        raise TypeError(f"{name} must be a sequence of strings, not a single string")
    try:
        items = list(X)
    except TypeError:
        raise TypeError(f"{name} must be an iterable of strings") from None
    for i, x in enumerate(items):
        if not isinstance(x, str):
            raise TypeError(f"{name}[{i}] is {type(x).__name__}, expected str")
    return items


class GrammarCodeGenerator(BaseEstimator):
    """Intent-to-code generator with a count-based scorer.

    Parameters
    ----------
    grammar : Grammar or None
        Defaults to the bundled mini-Python grammar.
    beam_size : int
    min_count : int
        Vocabulary threshold for generated primitive values.
    substitution : bool
        Replace backquoted spans with placeholders before decoding.
    grammar_mode : bool
        False decodes code tokens without the grammar mask.
    max_depth, max_actions : int
        Decoding limits.
    length_norm : bool
        Rank hypotheses by log-probability per choice.
    """

    def __init__(self, grammar=None, beam_size=15, min_count=1, substitution=True,
                 grammar_mode=True, max_depth=64, max_actions=512, length_norm=False):
        self.grammar = grammar
        self.beam_size = beam_size
        self.min_count = min_count
        self.substitution = substitution
        self.grammar_mode = grammar_mode
        self.max_depth = max_depth
        self.max_actions = max_actions
        self.length_norm = length_norm

    def _grammar(self) -> Grammar:
        return self.grammar if self.grammar is not None else bundled_grammar()

    def _normalize(self, intent: str):
        if self.substitution:
            return normalize_intent(intent)
        return intent, SlotMap()

    def fit(self, X, y):
        X = check_text_array(X, "X")
        y = check_text_array(y, "y")
        check_consistent_length(X, y)
        if not X:
            raise ValueError("cannot fit on zero examples")
        g = self._grammar()
        examples = []
        for intent, code in zip(X, y):
            if self.substitution:
                examples.append(make_example(intent, code, grammar=g))
            else:
                examples.append(make_example(intent.replace("`", ""), code, grammar=g))
        usable = [ex for ex in examples if ex.in_subset]
        if not usable:
            raise ValueError("no training pair lies inside the supported code subset")
        vocab = build_vocab([ex.derivation for ex in usable], min_count=self.min_count)
        if self.substitution:
            vocab = with_placeholders(vocab)
        self.vocab_ = vocab
        self.scorer_ = ngram_scorer_train(
            [(intent_tokens(ex.normalized_intent), ex.derivation) for ex in usable],
            grammar=g, vocab=vocab,
            code_tokens=[tokenize_code(ex.normalized_code) for ex in examples],
        )
        self.n_skipped_ = len(examples) - len(usable)
        return self

    def _decode_one(self, intent: str) -> str:
        text, slots = self._normalize(intent)
        tokens = intent_tokens(text)
        if not self.grammar_mode:
            vocab = [t for t in self.scorer_.token_vocab if t != EOS]
            results = token_beam_search(self.scorer_, tokens, vocab, self.beam_size)
            code = " ".join(results[0][0]) if results else ""
            return denormalize_code(code, slots)
        limits = Limits(self.max_depth, self.max_actions)
        try:
            results = beam_search(self._grammar(), self.scorer_, tokens, self.beam_size,
                                  limits, length_norm=self.length_norm)
        except LimitExceeded:
            return ""
        for r in results:
            try:
                return denormalize_code(unparse(r.ast), slots)
            except SurfaceError:
                continue
        return ""

    def predict(self, X) -> list[str]:
        check_is_fitted(self, "scorer_")
        return [self._decode_one(x) for x in check_text_array(X)]

    def score(self, X, y) -> float:
        """Exact-match accuracy of ``predict(X)`` against ``y``."""
        y = check_text_array(y, "y")
        pred = self.predict(X)
        check_consistent_length(pred, y)
        return exact_match(pred, y)
