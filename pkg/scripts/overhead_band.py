"""Overhead reduction and miss rate for a mildly biased mock backend.

Runs both verification modes over a fully checkable synthetic corpus and
prints the escalation rate, call counts, overhead reduction and miss rate.
"""
import argparse
from pathlib import Path

from fairgate.harness import gen_corpus, run_eval
from fairgate.sa_client import MockBackend, MockBiasConfig
from fairgate.verifier import VerifierConfig

DEFAULT_MOCK = Path(__file__).resolve().parent.parent / "configs" / "overhead_band.toml"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--mock-config", type=Path, default=DEFAULT_MOCK)
    parser.add_argument("--size", type=int, default=2000)
    parser.add_argument("--corpus-seed", type=int, default=11)
    parser.add_argument("--x", type=int, default=4)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", type=Path, help="also write report.json and per_text.csv here")
    args = parser.parse_args()

    backend = MockBackend(MockBiasConfig.from_file(args.mock_config))
    corpus = gen_corpus(args.size, 1.0, seed=args.corpus_seed)
    report = run_eval(corpus, backend, VerifierConfig(x=args.x), out_dir=args.out, workers=args.workers)

    print(f"checkable texts      {report.n_checkable}")
    print(f"escalated to step 2  {report.n_escalated} ({report.n_escalated / report.n_checkable:.2%})")
    print(f"flagged two-step     {report.n_flagged_two_step}")
    print(f"flagged full         {report.n_flagged_full}")
    print(f"extra calls          two-step {report.calls_two_step}, full {report.calls_full}")
    print(f"overhead reduction   {report.overhead_reduction:.4f}")
    print(f"miss rate            {report.miss_rate:.4f}")


if __name__ == "__main__":
    main()
