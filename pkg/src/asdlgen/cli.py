"""Command-line entry point: ``asdlgen <subcommand> ...``.

Exit status: 0 success, 1 domain error (bad grammar, code, derivation,
scorer response), 2 usage error, 3 I/O error.  Errors are printed on one
line as ``ClassName: message``.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import __version__
from .decode import (
    DecodeError,
    ExternalScorer,
    NgramScorer,
    UniformScorer,
    beam_search,
    ngram_scorer_train,
    sample,
    token_beam_search,
    token_sample,
)
from .derivation import ast_to_derivation, derivation_to_ast
from .evaluation import dumps_report, evaluate
from .grammar import BUNDLED, Grammar, bundled_grammar, load_grammar
from .ingest import IngestStats, load_conala, load_django, load_examples, save_examples
from .substitution import denormalize_code, intent_tokens, normalize_intent
from .surface import UnprintableError, parse_code, tokenize_code, unparse
from .transition import (
    Limits,
    TransitionError,
    apply,
    auto_complete_trace,
    due_completion,
    dump_derivation,
    is_completion,
    legal_actions,
    load_derivation,
    initial_state,
    parse_action,
)
from .vocab import Vocabulary, build_vocab, with_placeholders

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


def _grammar(arg: str) -> Grammar:
    """A grammar file path, or the name of a bundled grammar."""
    if not Path(arg).exists() and arg in BUNDLED:
        return bundled_grammar(arg)
    return load_grammar(arg)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _limits(args) -> Limits:
    return Limits(args.max_depth, args.max_actions)


# ---------------------------------------------------------------------------
# subcommands


def cmd_grammar_check(args) -> int:
    g = _grammar(args.file)
    print(f"ok: {len(g.productions)} constructors, {len(g.nonterminals)} nonterminals, "
          f"primitives {', '.join(sorted(g.primitives))}, axiom {g.axiom}")
    return EXIT_OK


def cmd_derive(args) -> int:
    g = _grammar(args.grammar)
    if args.code is not None:
        code = args.code
    elif args.stdin:
        code = sys.stdin.read().strip()
    else:
        raise ValueError("give --code or --stdin")
    tree = parse_code(code, mode=args.mode)
    root = args.root
    if root is None and args.mode == "auto" and tree.constructor not in {
            p.constructor for p in g.constructors_for(g.axiom)}:
        root = g.production(tree.constructor).lhs
    actions = ast_to_derivation(g, tree, root=root)
    _write(args.out, dump_derivation(actions, fmt=args.format))
    return EXIT_OK


def cmd_build(args) -> int:
    g = _grammar(args.grammar)
    actions = load_derivation(_read(args.derivation))
    print(unparse(derivation_to_ast(g, actions, root=args.root)))
    return EXIT_OK


def cmd_preprocess(args) -> int:
    stats = IngestStats()
    if args.format == "conala":
        examples = []
        for p in args.paths:
            examples += load_conala(p, strict=args.strict, provenance=args.provenance, stats=stats)
    else:
        if len(args.paths) != 2:
            raise ValueError("django format takes exactly two paths: NL file and code file")
        examples = load_django(args.paths[0], args.paths[1], stats=stats)
    if args.out is None:
        for ex in examples:
            sys.stdout.write(json.dumps(ex.to_json(), ensure_ascii=False) + "\n")
    else:
        save_examples(examples, args.out)
    print(f"loaded {stats.loaded}, in subset {stats.in_subset}, "
          f"out of subset {stats.out_of_subset}, skipped {stats.skipped}", file=sys.stderr)
    return EXIT_OK


def _corpus_derivations(path):
    return [ex.derivation for ex in load_examples(path) if ex.derivation is not None]


def cmd_vocab(args) -> int:
    v = build_vocab(_corpus_derivations(args.corpus), min_count=args.min_count)
    if args.placeholders:
        v = with_placeholders(v, args.placeholders)
    _write(args.out, v.dumps())
    return EXIT_OK


def cmd_train(args) -> int:
    g = _grammar(args.grammar)
    examples = load_examples(args.corpus)
    usable = [ex for ex in examples if ex.derivation is not None]
    if not usable:
        raise ValueError("corpus has no example inside the supported subset")
    vocab = build_vocab([ex.derivation for ex in usable], min_count=args.min_count)
    if args.placeholders:
        vocab = with_placeholders(vocab, args.placeholders)
    sc = ngram_scorer_train(
        [(intent_tokens(ex.normalized_intent), ex.derivation) for ex in usable],
        grammar=g, vocab=vocab,
        code_tokens=[tokenize_code(ex.normalized_code) for ex in examples],
    )
    sc.save(args.out)
    print(f"trained on {len(usable)} derivations; vocabulary {len(vocab)}", file=sys.stderr)
    return EXIT_OK


def _scorer(spec: str, vocab_path: str | None):
    if spec == "uniform":
        vocab = Vocabulary.load(vocab_path) if vocab_path else Vocabulary()
        return UniformScorer(vocab)
    kind, _, arg = spec.partition(":")
    if kind == "ngram" and arg:
        return NgramScorer.load(arg)
    if kind == "external" and arg:
        return ExternalScorer(arg)
    raise ValueError(f"unknown scorer {spec!r}; use uniform, ngram:<model> or external:<cmd>")


def cmd_decode(args) -> int:
    if args.beam < 1:
        raise ValueError("--beam must be >= 1")
    scorer = _scorer(args.scorer, args.vocab)
    try:
        text, slots = normalize_intent(args.intent) if args.substitute else (args.intent, None)
        tokens = intent_tokens(text)
        rng = random.Random(args.seed)

        def emit(lp, code):
            if slots is not None:
                code = denormalize_code(code, slots)
            print(f"{lp:.6f}\t{code}")

        if args.no_grammar:
            vocab = getattr(scorer, "token_vocab", ())
            if not vocab:
                raise ValueError("token mode needs a scorer with a code-token vocabulary")
            if args.sample:
                for _ in range(args.sample):
                    toks, lp = token_sample(scorer, tokens, vocab, rng, args.max_actions)
                    emit(lp, " ".join(toks))
            else:
                for toks, lp in token_beam_search(scorer, tokens, vocab, args.beam,
                                                  args.max_actions):
                    emit(lp, " ".join(toks))
            return EXIT_OK

        g = _grammar(args.grammar)
        if args.sample:
            results = [sample(g, scorer, tokens, rng, _limits(args), args.root)
                       for _ in range(args.sample)]
        else:
            results = beam_search(g, scorer, tokens, args.beam, _limits(args), args.root,
                                  length_norm=args.length_norm)
        for r in results:
            try:
                emit(r.log_prob, unparse(r.ast))
            except UnprintableError as e:
                print(f"{r.log_prob:.6f}\t# unprintable: {e}")
    finally:
        if isinstance(scorer, ExternalScorer):
            scorer.close()
    return EXIT_OK


def _lines(path: str) -> list[str]:
    return _read(path).splitlines()


def cmd_eval(args) -> int:
    hyp, ref = _lines(args.hyp), _lines(args.ref)
    print(dumps_report(evaluate(hyp, ref)))
    return EXIT_OK


def cmd_step(args) -> int:
    g = _grammar(args.grammar)
    s = initial_state(g, args.root)
    out = sys.stdout

    def show():
        due = due_completion(s)
        print(f"stack: {s.format_stack()}", file=out)
        if due is not None:
            print(f"mask: {{{due.kind}}}", file=out)
        else:
            print(f"mask: {legal_actions(g, s).describe()}", file=out)

    show()
    for line in sys.stdin:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            a = parse_action(line)
            if not is_completion(a):
                s, _ = auto_complete_trace(g, s)
            s = apply(g, s, a)
            done, _ = auto_complete_trace(g, s)
            if done.is_goal:
                s = done
        except (ValueError, TransitionError) as e:
            print(f"{type(e).__name__}: {e}", file=out)
            continue
        print(f"> {line}", file=out)
        if s.is_goal:
            print("goal", file=out)
            print(unparse(s.result) if args.print_code else repr(s.result), file=out)
            return EXIT_OK
        show()
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _parse_config(path: str) -> dict:
    cfg = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{n}: expected key=value")
        value = value.strip()
        low = value.lower()
        if low in ("true", "yes", "on"):
            value = True
        elif low in ("false", "no", "off"):
            value = False
        cfg[key.strip().replace("-", "_")] = value
    return cfg


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="asdlgen", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help="key=value file supplying defaults for flags")
    sub = p.add_subparsers(dest="command", required=True)

    gr = sub.add_parser("grammar", help="grammar tools")
    gsub = gr.add_subparsers(dest="grammar_command", required=True)
    chk = gsub.add_parser("check", help="parse and validate a grammar file")
    chk.add_argument("file")
    chk.set_defaults(func=cmd_grammar_check)

    def limits(sp):
        sp.add_argument("--max-depth", type=int, default=64)
        sp.add_argument("--max-actions", type=int, default=512)

    d = sub.add_parser("derive", help="code -> serialized derivation")
    d.add_argument("grammar")
    src = d.add_mutually_exclusive_group()
    src.add_argument("--code")
    src.add_argument("--stdin", action="store_true")
    d.add_argument("--mode", choices=("auto", "stmt", "expr"), default="auto")
    d.add_argument("--root")
    d.add_argument("--format", choices=("lines", "jsonl"), default="lines")
    d.add_argument("--out")
    d.set_defaults(func=cmd_derive)

    b = sub.add_parser("build", help="serialized derivation -> code")
    b.add_argument("grammar")
    b.add_argument("--derivation", required=True, help="file, or - for stdin")
    b.add_argument("--root")
    b.set_defaults(func=cmd_build)

    pp = sub.add_parser("preprocess", help="normalize a corpus into JSON lines")
    pp.add_argument("--format", choices=("conala", "django"), required=True)
    pp.add_argument("paths", nargs="+")
    pp.add_argument("--provenance", choices=("curated", "mined"), default="curated")
    pp.add_argument("--strict", action="store_true")
    pp.add_argument("--out")
    pp.set_defaults(func=cmd_preprocess)

    v = sub.add_parser("vocab", help="primitive vocabulary of a preprocessed corpus")
    v.add_argument("corpus")
    v.add_argument("--min-count", type=int, default=1)
    v.add_argument("--placeholders", type=int, default=0,
                   help="add var_i/lst_i for i < N")
    v.add_argument("--out")
    v.set_defaults(func=cmd_vocab)

    t = sub.add_parser("train", help="fit the count-based scorer")
    t.add_argument("corpus")
    t.add_argument("--grammar", default="mini_python")
    t.add_argument("--min-count", type=int, default=1)
    t.add_argument("--placeholders", type=int, default=10)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    dc = sub.add_parser("decode", help="ranked code for an intent")
    dc.add_argument("grammar")
    dc.add_argument("--intent", required=True)
    dc.add_argument("--scorer", default="uniform",
                    help="uniform | ngram:<model.json> | external:<command>")
    dc.add_argument("--vocab", help="vocabulary file for the uniform scorer")
    dc.add_argument("--beam", type=int, default=15)
    dc.add_argument("--no-grammar", action="store_true", help="unconstrained token mode")
    dc.add_argument("--sample", type=int, default=0, help="draw N samples instead of beam search")
    dc.add_argument("--seed", type=int, default=0)
    dc.add_argument("--root")
    dc.add_argument("--length-norm", action="store_true")
    dc.add_argument("--no-substitute", dest="substitute", action="store_false")
    limits(dc)
    dc.set_defaults(func=cmd_decode)

    e = sub.add_parser("eval", help="BLEU / exact match / validity report")
    e.add_argument("--hyp", required=True)
    e.add_argument("--ref", required=True)
    e.set_defaults(func=cmd_eval)

    st = sub.add_parser("step", help="interactive transition stepper (actions on stdin)")
    st.add_argument("grammar")
    st.add_argument("--root")
    st.add_argument("--print-code", action="store_true")
    st.set_defaults(func=cmd_step)
    return p


def _apply_config(parser: argparse.ArgumentParser, cfg: dict) -> None:
    stack = [parser]
    while stack:
        sp = stack.pop()
        sp.set_defaults(**{k: v for k, v in cfg.items()
                           if any(a.dest == k for a in sp._actions)})
        for a in sp._actions:
            if isinstance(a, argparse._SubParsersAction):
                stack.extend(a.choices.values())


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        config_path = None
        if "--config" in argv:
            i = argv.index("--config")
            config_path = argv[i + 1] if i + 1 < len(argv) else None
        if config_path:
            _apply_config(parser, _parse_config(config_path))
        try:
            args = parser.parse_args(argv)
        except SystemExit as e:
            return EXIT_OK if e.code == 0 else EXIT_USAGE
        return args.func(args)
    except OSError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TransitionError, DecodeError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
