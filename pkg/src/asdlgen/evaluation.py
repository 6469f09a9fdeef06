"""Corpus BLEU, exact-match accuracy and syntactic validity rate."""

from __future__ import annotations

import json
import math
import warnings
from collections import Counter

from .surface import SurfaceError, canonicalize, is_valid_code, tokenize_code

__all__ = ["corpus_bleu", "exact_match", "validity_rate", "evaluate", "BLEU_EPSILON"]

BLEU_EPSILON = 1e-9


def _ngrams(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _check_pairs(hyps, refs) -> None:
    if len(hyps) != len(refs):
        raise ValueError(f"{len(hyps)} hypotheses but {len(refs)} references")


def corpus_bleu(hypotheses, references, max_n: int = 4) -> float:
    """Corpus BLEU on a 0-100 scale.

    Clipped n-gram counts are pooled over the corpus for n = 1..max_n; a zero
    match count is replaced by ``BLEU_EPSILON`` so the geometric mean stays
    defined.  Inputs are token lists; strings are tokenized with the code
    lexer.
    """
    hyps = [tokenize_code(h) if isinstance(h, str) else list(h) for h in hypotheses]
    refs = [tokenize_code(r) if isinstance(r, str) else list(r) for r in references]
    _check_pairs(hyps, refs)
    if not hyps:
        raise ValueError("empty corpus")
    matches = [0] * max_n
    totals = [0] * max_n
    for h, r in zip(hyps, refs):
        for n in range(1, max_n + 1):
            hc, rc = _ngrams(h, n), _ngrams(r, n)
            matches[n - 1] += sum(min(c, rc[g]) for g, c in hc.items())
            totals[n - 1] += max(len(h) - n + 1, 0)
    hyp_len = sum(len(h) for h in hyps)
    ref_len = sum(len(r) for r in refs)
    if hyp_len == 0:
        return 0.0
    log_p = 0.0
    for m, t in zip(matches, totals):
        p = m / t if m > 0 else BLEU_EPSILON / max(t, 1)
        log_p += math.log(p) / max_n
    bp = 1.0 if hyp_len > ref_len else math.exp(1 - ref_len / hyp_len)
    return 100.0 * bp * math.exp(log_p)


def _canon(text: str):
    try:
        return canonicalize(text)
    except SurfaceError:
        return None


def exact_match(hypotheses, references) -> float:
    """Fraction of pairs with identical canonical forms; unparseable sides never match."""
    _check_pairs(hypotheses, references)
    if not hypotheses:
        raise ValueError("empty corpus")
    hits = 0
    for h, r in zip(hypotheses, references):
        ch, cr = _canon(h), _canon(r)
        hits += ch is not None and ch == cr
    return hits / len(hypotheses)


def validity_rate(outputs) -> float:
    outputs = list(outputs)
    if not outputs:
        warnings.warn("validity_rate of an empty list is taken as 1.0", stacklevel=2)
        return 1.0
    return sum(map(is_valid_code, outputs)) / len(outputs)


def evaluate(hypotheses, references) -> dict:
    """The JSON report: ``{bleu, exact_match, validity_rate, n}``."""
    hypotheses, references = list(hypotheses), list(references)
    return {
        "bleu": corpus_bleu(hypotheses, references),
        "exact_match": exact_match(hypotheses, references),
        "validity_rate": validity_rate(hypotheses),
        "n": len(hypotheses),
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True)
