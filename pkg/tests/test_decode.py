import json
import math
import random
import sys

import pytest

from asdlgen.decode import (
    CLOSE_KEY,
    EOS,
    ExternalScorer,
    NgramScorer,
    RolloutScorer,
    Scorer,
    ScoreRequest,
    ScoreResponse,
    ScorerError,
    UniformScorer,
    beam_search,
    combine_copy_gen,
    derivation_log_prob,
    ngram_scorer_train,
    sample,
    step_distribution,
    token_beam_search,
    token_sample,
)
from asdlgen.derivation import ast_to_derivation, choice_sequence
from asdlgen.grammar import parse_grammar
from asdlgen.surface import UnprintableError, is_valid_code, parse_code, tokenize_code, unparse
from asdlgen.transition import (
    CLOSE_STAR,
    Feasibility,
    apply,
    Limits,
    LimitExceeded,
    auto_complete,
    initial_state,
    legal_actions,
    parse_action,
    replay,
)
from asdlgen.tree import PrimitiveValue
from asdlgen.vocab import Vocabulary, build_vocab

from conftest import WORKED_TRACE, snippets
from oracles import brute_force_marginal, enumerate_derivations


def vocab_of(*texts, type_="constant"):
    return Vocabulary([(PrimitiveValue(type_, t), 1) for t in texts])


WORKED_CHOICES = [a for a in map(parse_action, WORKED_TRACE)
                if a.kind not in ("COMPLETE", "COMPLETE*")]


# ---------------------------------------------------------------------------
# copy / generate marginal


def test_marginal_worked_example():
    p = combine_copy_gen(0.6, {"v": 0.5, "w": 0.5}, {0: 0.25, 1: 0.75}, ["v", "u"])
    assert p["v"] == pytest.approx(0.40, abs=1e-12)
    assert p["w"] == pytest.approx(0.30, abs=1e-12)
    assert p["u"] == pytest.approx(0.30, abs=1e-12)


def test_marginal_gen_only_is_exact():
    gen = {"a": 0.1, "b": 0.2, "c": 0.7}
    assert combine_copy_gen(1.0, gen, {}, []) == gen


def test_marginal_repeated_tokens_aggregate():
    tokens = ["x", "y", "x"]
    p = combine_copy_gen(0.0, {}, {0: 0.2, 1: 0.5, 2: 0.3}, tokens)
    assert p == pytest.approx({"x": 0.5, "y": 0.5})


def _random_instance(rng):
    words = ["a", "b", "c", "d"]
    tokens = [rng.choice(words) for _ in range(rng.randint(1, 6))]
    gen_keys = rng.sample(words, rng.randint(1, 4))
    w = [rng.random() for _ in gen_keys]
    gen = {k: x / sum(w) for k, x in zip(gen_keys, w)}
    positions = rng.sample(range(len(tokens)), rng.randint(1, len(tokens)))
    w = [rng.random() for _ in positions]
    copy = {j: x / sum(w) for j, x in zip(positions, w)}
    p_gen = rng.choice([0.0, 1.0, rng.random()])
    return p_gen, gen, copy, tokens


def test_marginal_matches_brute_force():
    rng = random.Random(5)
    for _ in range(500):
        p_gen, gen, copy, tokens = _random_instance(rng)
        got = combine_copy_gen(p_gen, gen, copy, tokens)
        want = brute_force_marginal(p_gen, gen, copy, tokens)
        assert set(k for k, v in got.items() if v > 0) == set(want)
        for k, v in want.items():
            assert abs(got[k] - v) <= 1e-9
        assert abs(math.fsum(got.values()) - 1) <= 1e-9


@pytest.mark.parametrize("args", [
    (1.2, {"a": 1.0}, {}, []),
    (0.5, {"a": 0.5}, {0: 1.0}, ["a"]),
    (0.5, {"a": 1.0}, {0: 0.9}, ["a"]),
    (0.5, {"a": 1.0}, {3: 1.0}, ["a"]),
    (0.5, {"a": -0.5, "b": 1.5}, {0: 1.0}, ["a"]),
])
def test_marginal_rejects_bad_distributions(args):
    with pytest.raises(ScorerError):
        combine_copy_gen(*args)


# ---------------------------------------------------------------------------
# masked step distribution


class _FixedScorer(Scorer):
    def __init__(self, resp):
        self.resp = resp

    def score(self, request):
        return self.resp


def test_masked_distribution_normalizes(mini):
    rng = random.Random(2)
    scorers = [UniformScorer(vocab_of("1", "2")),
               RolloutScorer(mini, vocab_of("1", "'s'"))]
    for sc in scorers:
        for _ in range(50):
            r = sample(mini, sc, ["x", "3"], rng, Limits(10, 40))
            s = initial_state(mini)
            for a in r.choices:
                s = auto_complete(mini, s)
                dist = step_distribution(mini, sc, s, [], ["x", "3"])
                mask = legal_actions(mini, s)
                assert abs(math.fsum(math.exp(lp) for _, lp, _ in dist) - 1) <= 1e-9
                assert all(b in mask for b, _, _ in dist)
                assert all(lp <= 1e-12 for _, lp, _ in dist)
                s = apply(mini, s, a)


def test_scorer_mass_on_illegal_options_is_dropped(toy):
    s = initial_state(toy)
    resp = ScoreResponse(logprobs={"Constant": math.log(0.5), "Add": math.log(0.5)})
    dist = step_distribution(toy, _FixedScorer(resp), s, [], [])
    assert [(a.constructor, lp) for a, lp, _ in dist] == [("Constant", 0.0)]


def test_invalid_values_are_masked(mini):
    s = auto_complete(mini, replay(mini, [parse_action("PREDICT Expr"),
                                          parse_action("PREDICT Name")]))
    resp = ScoreResponse(p_gen=1.0, gen_dist={"for": 0.5, "x": 0.25, "1x": 0.25})
    dist = step_distribution(mini, _FixedScorer(resp), s, [], [])
    assert [a.value.text for a, _, _ in dist] == ["x"]


@pytest.mark.parametrize("resp", [
    ScoreResponse(logprobs={"Constant": math.log(0.4)}),
    ScoreResponse(p_gen=1.0, gen_dist={"1": 1.0}),
    ScoreResponse(),
])
def test_contract_violations(toy, resp):
    with pytest.raises(ScorerError):
        beam_search(toy, _FixedScorer(resp), [], beam_size=2, limits=Limits(3, 10))


# ---------------------------------------------------------------------------
# beam search


def test_single_zero_field_axiom():
    g = parse_grammar("axiom expr\nexpr = Unit\n")
    (r,) = beam_search(g, UniformScorer(), [], beam_size=1)
    assert [str(a) for a in r.derivation] == ["PREDICT Unit"] or len(r.derivation) == 1
    assert r.log_prob == 0.0


class _Teacher(Scorer):
    """Puts 0.9 on the next action of a fixed choice sequence."""

    def __init__(self, choices):
        self.choices = choices

    def score(self, req):
        want = self.choices[len(req.choice_history)]
        mask = req.mask
        if mask.is_rule_shape:
            keys = [CLOSE_KEY if a == CLOSE_STAR else a.constructor for a in mask.rule_actions()]
            target = CLOSE_KEY if want == CLOSE_STAR else want.constructor
            if len(keys) == 1:
                return ScoreResponse(logprobs={target: 0.0})
            rest = (1 - 0.9) / (len(keys) - 1)
            return ScoreResponse(logprobs={k: math.log(0.9 if k == target else rest)
                                           for k in keys})
        texts = ["7", "5", "4"]
        if want == CLOSE_STAR:
            return ScoreResponse(p_gen=1.0, gen_dist={t: 1 / 3 for t in texts},
                                 close_logprob=math.log(0.9))
        gen = {t: (0.9 if t == want.value.text else 0.05) for t in texts}
        return ScoreResponse(p_gen=1.0, gen_dist=gen,
                             close_logprob=math.log(0.1) if mask.allow_close else None)


def test_greedy_reproduces_worked_trace(toy):
    (r, *_) = beam_search(toy, _Teacher(WORKED_CHOICES), [], beam_size=1,
                          limits=Limits(3, 20))
    assert [str(a) for a in r.derivation] == [str(a) for a in map(parse_action, WORKED_TRACE)]
    assert unparse(r.ast) == "[7 + 5, 4]"


def test_uniform_beam_against_enumeration(toy):
    sc = UniformScorer(vocab_of("7", "5", "4"))
    limits = Limits(3, 8)
    everything = enumerate_derivations(toy, sc, [], 3, 8)
    results = beam_search(toy, sc, [], beam_size=15, limits=limits)
    assert 0 < len(results) <= 15
    table = {c: lp for c, lp in everything}
    for r in results:
        assert replay(toy, r.derivation).is_goal
        assert table[r.choices] == pytest.approx(r.log_prob, abs=1e-9)
    # with a beam as wide as the space the result is the whole space, in order
    full = beam_search(toy, sc, [], beam_size=len(everything), limits=limits)
    assert sorted((str(r.choices), round(r.log_prob, 9)) for r in full) == \
        sorted((str(c), round(lp, 9)) for c, lp in everything)
    assert [r.log_prob for r in full] == sorted((r.log_prob for r in full), reverse=True)


def test_log_probs_monotone_and_consistent(mini):
    corpus = [([], ast_to_derivation(mini, parse_code(s, mode="stmt"))) for s in snippets()]
    sc = ngram_scorer_train(corpus, grammar=mini)
    for r in beam_search(mini, sc, [], beam_size=5, limits=Limits(12, 40)):
        lp, n = derivation_log_prob(mini, sc, [], r.choices)
        assert lp <= 0
        assert replay(mini, r.derivation) == r.state


def test_limits_without_solution(toy):
    with pytest.raises(LimitExceeded):
        beam_search(toy, UniformScorer(vocab_of("1")), [], limits=Limits(0, 10))
    with pytest.raises(LimitExceeded):
        beam_search(toy, UniformScorer(vocab_of("1")), [], limits=Limits(3, 1))
    with pytest.raises(ValueError):
        beam_search(toy, UniformScorer(), [], beam_size=0)


def test_no_candidate_values_means_no_result(toy):
    # nothing to generate for constants and no copy candidates: no Constant appears
    results = beam_search(toy, UniformScorer(), [], beam_size=5, limits=Limits(3, 10))
    assert results
    for r in results:
        assert all(a.constructor != "Constant" for a in r.derivation)
        assert set(unparse(r.ast)) <= set("[]+, ")


def test_grammar_mode_totality(mini):
    sc = RolloutScorer(mini, vocab_of("1", "'a'") )
    rng = random.Random(0)
    for _ in range(200):
        r = sample(mini, sc, ["x"], rng)
        try:
            code = unparse(r.ast)
        except UnprintableError:
            continue
        assert is_valid_code(code)


# ---------------------------------------------------------------------------
# n-gram scorer


def test_ngram_prefers_training_path(toy):
    d = ast_to_derivation(toy, parse_code("[7+5,4]"))
    sc = ngram_scorer_train([([], d)], grammar=toy)
    s = initial_state(toy)
    history = []
    for a in choice_sequence(d):
        s = auto_complete(toy, s)
        dist = step_distribution(toy, sc, s, history, [])
        best = max(lp for _, lp, _ in dist)
        assert dict((b, lp) for b, lp, _ in dist)[a] == best
        s = apply(toy, s, a)
        history.append(a)


def test_ngram_unseen_context_is_uniform(toy):
    sc = ngram_scorer_train([([], ast_to_derivation(toy, parse_code("4")))], grammar=toy)
    mask = legal_actions(toy, initial_state(toy))
    req = ScoreRequest(initial_state(toy), [CLOSE_STAR], [], mask)
    lps = sc.score(req).logprobs
    assert len(set(round(v, 12) for v in lps.values())) == 1


def test_ngram_copy_distribution(mini):
    d = ast_to_derivation(mini, parse_code("x = y", mode="stmt"))
    sc = ngram_scorer_train([(["set", "x", "to", "y"], d)], grammar=mini)
    s = auto_complete(mini, replay(mini, [parse_action("PREDICT Assign"),
                                          parse_action("PREDICT Name")]))
    resp = sc.score(ScoreRequest(s, [], ["y", "and", "x", "y"], legal_actions(mini, s)))
    assert resp.copy_dist == {0: 1 / 3, 2: 1 / 3, 3: 1 / 3}
    # both generations copied from the intent: (0 + 1) / (2 + 2)
    assert resp.p_gen == pytest.approx(0.25)
    resp = sc.score(ScoreRequest(s, [], ["nothing"], legal_actions(mini, s)))
    assert resp.p_gen == 1.0 and resp.copy_dist == {}


def test_ngram_perplexity_not_worse_than_uniform(mini):
    corpus = [([], ast_to_derivation(mini, parse_code(s, mode="stmt"))) for s in snippets()]
    vocab = build_vocab([d for _, d in corpus])
    ng = ngram_scorer_train(corpus, grammar=mini, vocab=vocab)
    un = UniformScorer(vocab)

    def ppl(sc):
        total, n = 0.0, 0
        for toks, d in corpus:
            lp, k = derivation_log_prob(mini, sc, toks, d)
            total += lp
            n += k
        return math.exp(-total / n)

    assert ppl(ng) <= ppl(un)


def test_ngram_save_load(toy, tmp_path):
    d = ast_to_derivation(toy, parse_code("[7+5,4]"))
    sc = ngram_scorer_train([(["7"], d)], grammar=toy, code_tokens=[["[", "7", "]"]])
    sc.save(tmp_path / "m.json")
    back = NgramScorer.load(tmp_path / "m.json")
    assert back.to_json() == sc.to_json()
    assert [r.log_prob for r in beam_search(toy, back, ["7"], 3, Limits(3, 10))] == \
        [r.log_prob for r in beam_search(toy, sc, ["7"], 3, Limits(3, 10))]


def test_ngram_empty_corpus():
    with pytest.raises(ValueError):
        ngram_scorer_train([])


# ---------------------------------------------------------------------------
# token mode


def test_token_mode_can_emit_invalid_code():
    toks = [tokenize_code(s) for s in ["text = text[1:]", "x = [0] * 2", "f(x)"]]
    sc = ngram_scorer_train([([], [parse_action("PREDICT Expr")])],
                            grammar=parse_grammar("axiom stmt\nstmt = Expr\n"),
                            code_tokens=toks)
    vocab = [t for t in sc.token_vocab if t != EOS]
    rng = random.Random(0)
    outs = [" ".join(token_sample(sc, [], vocab, rng)[0]) for _ in range(100)]
    assert any(not is_valid_code(o) for o in outs)
    assert any(is_valid_code(o) for o in outs)
    best = token_beam_search(sc, [], vocab, beam_size=3, max_len=12)
    assert len(best) <= 3 and all(lp <= 0 for _, lp in best)


# ---------------------------------------------------------------------------
# external scorer

_UNIFORM_SERVER = r"""
import json, math, sys
for line in sys.stdin:
    req = json.loads(line)
    m = req["mask"]
    if m["shape"] in ("predict", "predict_star"):
        keys = list(m["constructors"]) + (["CLOSE*"] if m["allow_close"] else [])
        out = {"logprobs": {k: -math.log(len(keys)) for k in keys}}
    else:
        out = {"p_gen": 1.0, "gen": {"1": 0.5, "2": 0.5}, "copy": {}}
        if m["allow_close"]:
            out["close_logprob"] = math.log(0.5)
    print(json.dumps(out), flush=True)
"""


def test_external_scorer_matches_in_process(toy):
    with ExternalScorer([sys.executable, "-c", _UNIFORM_SERVER]) as ext:
        got = beam_search(toy, ext, [], beam_size=5, limits=Limits(3, 8))
    want = beam_search(toy, UniformScorer(vocab_of("1", "2")), [], beam_size=5,
                       limits=Limits(3, 8))
    assert [(r.choices, round(r.log_prob, 12)) for r in got] == \
        [(r.choices, round(r.log_prob, 12)) for r in want]


def test_external_scorer_garbage(toy):
    with ExternalScorer([sys.executable, "-c", "import sys\nfor l in sys.stdin: print('nope', flush=True)"]) as ext:
        with pytest.raises(ScorerError):
            beam_search(toy, ext, [], beam_size=2, limits=Limits(3, 8))


def test_request_json_round(toy):
    s = initial_state(toy)
    req = ScoreRequest(s, [], ["a"], legal_actions(toy, s))
    d = json.loads(json.dumps(req.to_json()))
    assert d["mask"]["shape"] == "predict" and d["tokens"] == ["a"]
    resp = ScoreResponse(p_gen=0.5, gen_dist={"1": 1.0}, copy_dist={0: 1.0}, close_logprob=-1.0)
    assert ScoreResponse.from_json(json.loads(json.dumps(resp.to_json()))) == resp


def test_feasibility_respected_by_search(mini):
    limits = Limits(4, 12)
    feas = Feasibility(mini, limits)
    sc = RolloutScorer(mini, vocab_of("1"))
    for r in beam_search(mini, sc, [], beam_size=10, limits=limits):
        assert len(r.choices) <= 12
        assert feas.ok(r.state, len(r.choices))
