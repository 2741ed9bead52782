"""Closed-form escalation and miss probabilities for the sampling heuristic.

Two models are covered.

``unanimity_probability`` treats every sampled mutant label as an independent
Bernoulli draw with a per-gender positive rate. The first step passes when
all ``x_m + x_f`` sampled labels agree.

``stochastic_flip_rates`` is exact for the stochastic-flip mock backend with
no female penalty: male mutants all get the text's gender-blind label, and
each female mutant flips independently with probability ``p``. With ``k`` of
the ``n`` female mutants flipped, the first step draws ``x`` of them without
replacement and passes iff none of the flipped ones is drawn.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, sqrt

from fairgate.verifier import as_fraction


def unanimity_probability(p_m: float, p_f: float, x_m: int, x_f: int | None = None) -> float:
    x_f = x_m if x_f is None else x_f
    return p_m**x_m * p_f**x_f + (1 - p_m) ** x_m * (1 - p_f) ** x_f


@dataclass(frozen=True)
class FlipRates:
    escalation: float
    biased: float
    missed: float

    @property
    def miss_rate(self) -> float:
        return self.missed / self.biased if self.biased else 0.0


def stochastic_flip_rates(p: float, x: int, n: int, alpha: float | Fraction) -> FlipRates:
    tol = as_fraction(alpha)
    escalation = biased = missed = 0.0
    for k in range(n + 1):
        pk = comb(n, k) * p**k * (1 - p) ** (n - k)
        p_pass = comb(n - k, x) / comb(n, x)
        escalation += pk * (1 - p_pass)
        # male rate is 0 or 1, female rate is k/n away from it
        if Fraction(k, n) > tol:
            biased += pk
            missed += pk * p_pass
    return FlipRates(escalation=escalation, biased=biased, missed=missed)


def binomial_se(p: float, trials: int) -> float:
    return sqrt(p * (1 - p) / trials) if trials else float("inf")
