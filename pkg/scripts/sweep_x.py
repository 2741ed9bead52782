"""Trade-off between step-one sample size X and overhead / miss rate.

Sweeps X (and optionally alpha) with one mock backend and prints one row
per sweep point.
"""
import argparse

from fairgate.harness import gen_corpus, parse_sweep, run_eval
from fairgate.sa_client import MockBackend, MockBiasConfig


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--mock", default="stochastic_flip:p=0.05,seed=2")
    parser.add_argument("--sweep", default="x=1..8")
    parser.add_argument("--size", type=int, default=1000)
    parser.add_argument("--checkable-fraction", type=float, default=0.5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    corpus = gen_corpus(args.size, args.checkable_fraction, seed=args.seed)
    report = run_eval(corpus, MockBackend(MockBiasConfig.parse(args.mock)), sweep=parse_sweep(args.sweep), workers=args.workers)
    print("x   alpha  escalated  flagged(2s/full)  reduction  miss_rate")
    for p in report.points:
        print(
            f"{p.x:<3} {p.alpha:<6} {p.n_escalated:<10} {p.n_flagged_two_step:>4}/{p.n_flagged_full:<11}"
            f" {p.overhead_reduction:<10.4f} {p.miss_rate:.4f}"
        )


if __name__ == "__main__":
    main()
