"""Monte Carlo escalation and miss rates against the closed form.

For each flip probability p, a stochastic-flip mock is run over a fully
checkable corpus; observed rates are printed next to the exact values and
their distance in standard errors.
"""
import argparse

from fairgate.harness import gen_corpus, run_eval
from fairgate.sa_client import MockBackend, MockBiasConfig, MockMode
from fairgate.theory import binomial_se, stochastic_flip_rates
from fairgate.verifier import VerifierConfig


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--p", type=float, nargs="+", default=[0.02, 0.05, 0.1, 0.15, 0.3])
    parser.add_argument("--size", type=int, default=2000)
    parser.add_argument("--x", type=int, default=4)
    parser.add_argument("--alpha", type=float, default=0.10)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    cfg = VerifierConfig(x=args.x, alpha=args.alpha)
    corpus = gen_corpus(args.size, 1.0, seed=args.seed)
    print("p      escalation(obs/exact/z)      biased(obs/exact)   miss(obs/exact/z)")
    for p in args.p:
        mock = MockBackend(MockBiasConfig(mode=MockMode.STOCHASTIC_FLIP, p=p, seed=args.seed))
        report = run_eval(corpus, mock, cfg, workers=args.workers)
        exact = stochastic_flip_rates(p, cfg.x, cfg.n_per_gender, cfg.alpha)
        n = report.n_checkable
        esc = report.n_escalated / n
        z_esc = (esc - exact.escalation) / (binomial_se(exact.escalation, n) or 1.0)
        miss = report.miss_rate
        z_miss = (miss - exact.miss_rate) / (binomial_se(exact.miss_rate, max(1, report.n_flagged_full)) or 1.0)
        print(
            f"{p:<6} {esc:.4f}/{exact.escalation:.4f}/{z_esc:+.2f}"
            f"      {report.n_flagged_full / n:.4f}/{exact.biased:.4f}"
            f"      {miss:.4f}/{exact.miss_rate:.4f}/{z_miss:+.2f}"
        )


if __name__ == "__main__":
    main()
