"""Acceptance gate: one PASS/FAIL line per criterion.

Run under pytest (the lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

import random
import sys
import time
import warnings
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from asdlgen.decode import (  # noqa: E402
    EOS,
    RolloutScorer,
    beam_search,
    combine_copy_gen,
    ngram_scorer_train,
    sample,
    token_sample,
)
from asdlgen.derivation import ast_to_derivation, derivation_to_ast  # noqa: E402
from asdlgen.evaluation import corpus_bleu, exact_match, validity_rate  # noqa: E402
from asdlgen.grammar import bundled_grammar  # noqa: E402
from asdlgen.ingest import load_conala  # noqa: E402
from asdlgen.substitution import (  # noqa: E402
    denormalize_code,
    normalize_code,
    normalize_intent,
)
from asdlgen.surface import (  # noqa: E402
    UnprintableError,
    canonicalize,
    parse_code,
    tokenize_code,
    unparse,
)
from asdlgen.transition import Limits, dump_derivation, replay  # noqa: E402
from asdlgen.tree import PrimitiveValue  # noqa: E402
from asdlgen.vocab import Vocabulary  # noqa: E402

from conftest import (  # noqa: E402
    FIXTURES,
    QUALITATIVE,
    QUALITATIVE_MATCHES,
    WORKED_INTENT,
    WORKED_NORMALIZED,
    WORKED_PREDICTED,
    WORKED_RESTORED,
    WORKED_TRACE,
    snippets,
)
from oracles import brute_force_marginal, enumerate_derivations  # noqa: E402

RESULTS: list[str] = []


def report(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} — {detail}"
    RESULTS.append(line)
    print(line)


# ---------------------------------------------------------------------------


def criterion_1():
    t0 = time.perf_counter()
    g = bundled_grammar("toy_expr")
    actions = ast_to_derivation(g, parse_code("[7+5,4]"))
    trace_ok = dump_derivation(actions).splitlines() == WORKED_TRACE
    code = unparse(derivation_to_ast(g, actions))
    elapsed = time.perf_counter() - t0
    ok = trace_ok and code == "[7 + 5, 4]" and elapsed < 1.0
    return ok, f"{len(actions)} actions, trace {'identical' if trace_ok else 'DIFFERS'}, " \
               f"rebuilt {code!r}, {elapsed * 1000:.1f} ms"


def criterion_2():
    text, slots = normalize_intent(WORKED_INTENT)
    restored = denormalize_code(WORKED_PREDICTED, slots)
    back = normalize_code(WORKED_RESTORED, slots)
    ok = text == WORKED_NORMALIZED and restored == WORKED_RESTORED and back == WORKED_PREDICTED
    return ok, f"intent -> {text!r}; code -> {restored!r}"


def criterion_3():
    t0 = time.perf_counter()
    g = bundled_grammar()
    values = [PrimitiveValue("identifier", v) for v in ("x", "y", "f", "var_0", "lst_0")]
    values += [PrimitiveValue("constant", v) for v in ("0", "1", "'a'", "None", "True", "2.5")]
    scorer = RolloutScorer(g, Vocabulary([(v, 1) for v in values]))
    rng = random.Random(0)
    limits = Limits(64, 512)
    printed, unprintable, bad_replay = [], 0, 0
    for _ in range(1000):
        r = sample(g, scorer, ["x", "items", "3"], rng, limits)
        if replay(g, r.derivation) != r.state or not r.state.is_goal:
            bad_replay += 1
        try:
            printed.append(unparse(r.ast))
        except UnprintableError:
            unprintable += 1
    rate = validity_rate(printed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SyntaxWarning)
        compiled = sum(_compiles(c) for c in printed)
    elapsed = time.perf_counter() - t0
    ok = bad_replay == 0 and rate == 1.0 and compiled == len(printed) and elapsed < 30
    return ok, (f"{len(printed)} printed (validity {rate:.3f}, {compiled} compile), "
                f"{unprintable} unprintable, {bad_replay} replay mismatches, {elapsed:.1f} s")


def _compiles(code):
    try:
        compile(code, "<sample>", "exec")
        return True
    except SyntaxError:
        return False


def criterion_4():
    codes = list(snippets()) + [ex.code for ex in load_conala(FIXTURES / "conala_sample.json")]
    g = bundled_grammar()
    stub = [([], ast_to_derivation(g, parse_code(snippets()[0], mode="stmt")))]
    scorer = ngram_scorer_train(stub, grammar=g, code_tokens=[tokenize_code(c) for c in codes])
    vocab = [t for t in scorer.token_vocab if t != EOS]
    rng = random.Random(0)
    outs = [" ".join(token_sample(scorer, [], vocab, rng)[0]) for _ in range(200)]
    rate = validity_rate(outs)
    return rate < 1.0, f"token-mode validity {rate:.3f} over {len(outs)} samples"


def _random_instance(rng):
    words = ["a", "b", "c", "d", "e"]
    tokens = [rng.choice(words) for _ in range(rng.randint(1, 8))]
    gen_keys = rng.sample(words, rng.randint(1, len(words)))
    w = [rng.random() for _ in gen_keys]
    gen = {k: x / sum(w) for k, x in zip(gen_keys, w)}
    positions = rng.sample(range(len(tokens)), rng.randint(1, len(tokens)))
    w = [rng.random() for _ in positions]
    copy = {j: x / sum(w) for j, x in zip(positions, w)}
    p_gen = rng.choice([0.0, 1.0, rng.random(), rng.random()])
    return p_gen, gen, copy, tokens


def criterion_5():
    rng = random.Random(0)
    worst, repeated = 0.0, 0
    for _ in range(1000):
        p_gen, gen, copy, tokens = _random_instance(rng)
        repeated += len(set(tokens[j] for j in copy)) < len(copy)
        got = combine_copy_gen(p_gen, gen, copy, tokens)
        want = brute_force_marginal(p_gen, gen, copy, tokens)
        for k in set(got) | set(want):
            worst = max(worst, abs(got.get(k, 0.0) - want.get(k, 0.0)))
    ok = worst <= 1e-9 and repeated > 0
    return ok, f"max deviation {worst:.2e} over 1000 instances ({repeated} with repeated copies)"


def criterion_6():
    g = bundled_grammar()
    items = snippets()
    seen, failures = set(), []
    for code in items:
        tree = parse_code(code, mode="stmt")
        actions = ast_to_derivation(g, tree)
        seen.update(a.constructor for a in actions if a.constructor)
        if unparse(derivation_to_ast(g, actions)) != canonicalize(code):
            failures.append(code)
    covered = seen >= {p.constructor for p in g.productions}
    ok = not failures and len(items) >= 40 and covered
    return ok, (f"{len(items) - len(failures)}/{len(items)} snippets round-trip, "
                f"{len(seen)}/{len(g.productions)} constructors exercised")


def _oracle_scorer(g, limits, seed):
    rng = random.Random(seed)
    pool = Vocabulary([(PrimitiveValue("constant", v), 1) for v in ("7", "5", "4")])
    policy = RolloutScorer(g, pool, beta=rng.uniform(0.2, 1.5), close_bias=rng.uniform(0.2, 0.8))
    corpus = [([], sample(g, policy, [], rng, limits).derivation)
              for _ in range(rng.randint(1, 6))]
    tokens = ["7", "x", "4", "7"][:rng.randint(0, 4)]
    return ngram_scorer_train(corpus, grammar=g), tokens


def criterion_7():
    t0 = time.perf_counter()
    g = bundled_grammar("toy_expr")
    limits = Limits(3, 10)
    agree, sizes = 0, []
    for seed in range(20):
        scorer, tokens = _oracle_scorer(g, limits, seed)
        space = enumerate_derivations(g, scorer, tokens, limits.max_depth, limits.max_actions)
        best = max(lp for _, lp in space)
        argmax = {c for c, lp in space if abs(lp - best) <= 1e-9}
        (top, *_) = beam_search(g, scorer, tokens, beam_size=len(space), limits=limits)
        agree += top.choices in argmax and abs(top.log_prob - best) <= 1e-9
        sizes.append(len(space))
    elapsed = time.perf_counter() - t0
    ok = agree == 20 and elapsed < 10
    return ok, (f"top-1 agreement {agree}/20, {min(sizes)}-{max(sizes)} derivations "
                f"enumerated per instance, {elapsed:.1f} s")


def criterion_8():
    refs = [gold for gold, *_ in QUALITATIVE]
    bleu = corpus_bleu(refs, refs)
    wrong = []
    for row, (gold, *preds) in enumerate(QUALITATIVE):
        for col, pred in enumerate(preds, 1):
            if exact_match([pred], [gold]) != float((row, col) in QUALITATIVE_MATCHES):
                wrong.append((gold, pred))
    ok = abs(bleu - 100) <= 1e-6 and not wrong
    n = sum(len(p) for _, *p in QUALITATIVE)
    return ok, f"BLEU(x, x) = {bleu:.6f}; {n - len(wrong)}/{n} gold/prediction pairs judged as annotated"


CRITERIA = [
    (1, "worked derivation golden test", criterion_1),
    (2, "substitution golden test", criterion_2),
    (3, "grammar-mode validity over 1000 rollouts", criterion_3),
    (4, "token-mode produces invalid code", criterion_4),
    (5, "copy/generate marginal vs brute force", criterion_5),
    (6, "round-trip suite", criterion_6),
    (7, "beam search vs exhaustive enumeration", criterion_7),
    (8, "metric sanity", criterion_8),
]

NOT_APPLICABLE = [
    (9, "published benchmark scores",
     "needs trained neural encoders and the full datasets; replaced by criteria 3-7"),
    (10, "corpus BLEU of intents against code on real datasets",
     "diagnostic only; needs the full datasets, which are not bundled"),
]


@pytest.mark.parametrize("number,title,check", CRITERIA, ids=[f"c{n}" for n, *_ in CRITERIA])
def test_criterion(number, title, check):
    ok, detail = check()
    report(number, title, ok, detail)
    assert ok, detail


@pytest.mark.parametrize("number,title,reason", NOT_APPLICABLE,
                         ids=[f"c{n}" for n, *_ in NOT_APPLICABLE])
def test_not_applicable(number, title, reason):
    line = f"[N/A ] criterion {number}: {title} — {reason}"
    RESULTS.append(line)
    print(line)
    pytest.skip(reason)


if __name__ == "__main__":
    failed = 0
    for number, title, check in CRITERIA:
        ok, detail = check()
        report(number, title, ok, detail)
        failed += not ok
    for number, title, reason in NOT_APPLICABLE:
        print(f"[N/A ] criterion {number}: {title} — {reason}")
    sys.exit(1 if failed else 0)
