"""Command-line entry point: ``fairgate <subcommand>``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from fairgate._http import parse_address
from fairgate.extraction import TextTooLong, extract_template, tokenize
from fairgate.harness import EVAL_MODES, EvalAborted, gen_corpus, parse_sweep, run_eval, write_corpus
from fairgate.lexicon import DEFAULT_PRONOUNS, LexiconError, default_lexicon, load_lexicon
from fairgate.mutation import MutationError, generate_mutants, text_seed
from fairgate.proxy import ConfigError, load_proxy_config, serve
from fairgate.sa_client import HttpBackend, MockBackend, MockBiasConfig, run_mock_server
from fairgate.verifier import VerifierConfig

log = logging.getLogger("fairgate")


def _lexicon(args: argparse.Namespace):
    return load_lexicon(args.lexicon) if args.lexicon else default_lexicon()


def cmd_template(args: argparse.Namespace) -> int:
    template = extract_template(tokenize(args.text), _lexicon(args), DEFAULT_PRONOUNS)
    if not template.checkable:
        print("no protected tokens")
        return 0
    print(template.annotate())
    for c in template.clusters:
        anchor = repr(c.anchor) if c.anchor else "(pronoun-only)"
        kinds = ", ".join(sorted(k.value for k in template.kinds(c.id)))
        print(f"cluster {c.id}: {c.gender} {anchor} [{kinds}]")
    return 0


def cmd_mutants(args: argparse.Namespace) -> int:
    lexicon = _lexicon(args)
    template = extract_template(tokenize(args.text), lexicon, DEFAULT_PRONOUNS)
    if not template.checkable:
        print("no protected tokens")
        return 0
    mutants = generate_mutants(template, lexicon, DEFAULT_PRONOUNS, args.n, text_seed(args.seed, args.text))
    for m in mutants.male + mutants.female:
        print(f"{m.gender.value}\t{m.text.replace(chr(10), ' ')}")
    return 0


def cmd_gen_corpus(args: argparse.Namespace) -> int:
    texts = gen_corpus(args.size, args.checkable_fraction, args.seed)
    write_corpus(args.out, texts)
    log.info("wrote %d texts to %s", len(texts), args.out)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    lexicon = _lexicon(args)
    if args.backend_url:
        backend = HttpBackend(args.backend_url)
    else:
        backend = MockBackend(MockBiasConfig.parse(args.mock), lexicon)
    config = VerifierConfig(x=args.x, alpha=args.alpha, n_per_gender=args.n_per_gender, seed=args.seed)
    sweep = parse_sweep(args.sweep, config) if args.sweep else None
    modes = (args.mode,) if args.mode else ("two_step", "full")
    try:
        report = run_eval(args.corpus, backend, config, sweep, args.out, args.workers, modes, lexicon)
    except EvalAborted as exc:
        log.error("%s (partial report written to %s)", exc, args.out)
        return 1
    p = report.primary
    log.info(
        "texts=%d checkable=%d flagged(two_step)=%s flagged(full)=%s reduction=%s miss_rate=%s",
        report.n_texts, report.n_checkable, p.n_flagged_two_step, p.n_flagged_full,
        p.overhead_reduction, p.miss_rate,
    )
    return 0


def cmd_proxy(args: argparse.Namespace) -> int:
    try:
        config = load_proxy_config(args.config, backend_url=args.backend_url, mode=args.mode)
    except ConfigError as exc:
        print(f"fairgate proxy: {exc}", file=sys.stderr)
        return 2
    handle = serve(config, parse_address(args.addr))
    try:
        handle.wait()
    except KeyboardInterrupt:
        handle.shutdown()
    return 0


def cmd_mock_server(args: argparse.Namespace) -> int:
    try:
        config = MockBiasConfig.from_file(args.config) if args.config else MockBiasConfig.parse(args.mock)
    except (OSError, ValueError) as exc:
        print(f"fairgate mock-server: {exc}", file=sys.stderr)
        return 2
    addr = args.addr or os.environ.get("SA_MOCK_ADDR", "127.0.0.1:8001")
    handle = run_mock_server(config, parse_address(addr), _lexicon(args))
    try:
        handle.wait()
    except KeyboardInterrupt:
        handle.shutdown()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairgate", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_lexicon(p: argparse.ArgumentParser) -> argparse.ArgumentParser:
        p.add_argument("--lexicon", type=Path, help="name<TAB>M|F file (default: bundled list)")
        return p

    p = with_lexicon(sub.add_parser("template", help="print the annotated template of TEXT"))
    p.add_argument("text")
    p.set_defaults(func=cmd_template)

    p = with_lexicon(sub.add_parser("mutants", help="print male and female mutants of TEXT"))
    p.add_argument("text")
    p.add_argument("--n", type=int, default=30, help="mutants per gender")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_mutants)

    p = sub.add_parser("gen-corpus", help="write a synthetic review corpus")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--checkable-fraction", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_gen_corpus)

    p = with_lexicon(sub.add_parser("eval", help="run a corpus through the verifier"))
    p.add_argument("--corpus", type=Path, required=True)
    backend = p.add_mutually_exclusive_group(required=True)
    backend.add_argument("--backend-url")
    backend.add_argument("--mock", help="mode[:key=value,...], e.g. stochastic_flip:p=0.05,seed=1")
    p.add_argument("--x", type=int, default=4)
    p.add_argument("--alpha", type=float, default=0.10)
    p.add_argument("--n-per-gender", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=EVAL_MODES, help="run only this mode (default: two_step and full)")
    p.add_argument("--sweep", help='e.g. "x=1..8;alpha=0.05,0.10,0.20"')
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("proxy", help="run the bias-annotating HTTP sidecar")
    p.add_argument("--config", type=Path)
    p.add_argument("--backend-url")
    p.add_argument("--mode", choices=("two_step", "full", "off"))
    p.add_argument("--addr", default="127.0.0.1:8000")
    p.set_defaults(func=cmd_proxy)

    p = with_lexicon(sub.add_parser("mock-server", help="run the biased mock SA backend"))
    p.add_argument("--config", type=Path, help="TOML mock config")
    p.add_argument("--mock", default="blind", help="mode[:key=value,...] when no --config")
    p.add_argument("--addr", help="host:port (default $SA_MOCK_ADDR or 127.0.0.1:8001)")
    p.set_defaults(func=cmd_mock_server)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (TextTooLong, MutationError, LexiconError, ValueError, OSError) as exc:
        print(f"fairgate {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
