"""Runtime check of distributional fairness over gender mutants.

For one input text, the male and female mutant groups should receive
positive predictions at similar rates::

    |pos_F - pos_M| <= alpha

Querying every mutant is expensive, so :meth:`Verifier.check` first queries a
small seeded sample from each gender and only runs the full comparison when
that sample disagrees. :meth:`Verifier.check_full` always runs the full
comparison and serves as the ground truth for miss-rate measurements.

Typical use, wrapping an existing ``predict`` function::

    rv = Verifier(sa_system.predict, x=4, alpha=0.10)
    result, is_bias = rv.verify(text)
"""
from __future__ import annotations

import enum
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

from fairgate.extraction import MAX_TEXT_LENGTH, TextTooLong, extract_template, tokenize
from fairgate.lexicon import DEFAULT_PRONOUNS, NameLexicon, PronounTable, default_lexicon
from fairgate.mutation import MutationError, derive_seed, generate_mutants, text_seed


class Sentiment(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"

    @classmethod
    def coerce(cls, value: Any) -> "Sentiment":
        """Accept a Sentiment, a label string, or a 0/1 class index."""
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            key = value.strip().lower()
            if key in ("positive", "pos"):
                return cls.POSITIVE
            if key in ("negative", "neg"):
                return cls.NEGATIVE
        elif isinstance(value, (bool, int)) and int(value) in (0, 1):
            return cls.POSITIVE if int(value) == 1 else cls.NEGATIVE
        raise ValueError(f"unknown sentiment label {value!r}")

    @property
    def flipped(self) -> "Sentiment":
        return Sentiment.NEGATIVE if self is Sentiment.POSITIVE else Sentiment.POSITIVE


class Stage(enum.Enum):
    NOT_CHECKABLE = "not_checkable"
    STEP1_PASS = "step1_pass"
    STEP2_FAIR = "step2_fair"
    STEP2_BIASED = "step2_biased"


def as_fraction(value: float | int | str | Fraction) -> Fraction:
    """Exact rational for a tolerance; floats are read via their shortest repr (0.1 -> 1/10)."""
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class VerifierConfig:
    x: int = 4
    alpha: float = 0.10
    n_per_gender: int = 30
    seed: int = 0
    max_parallel: int = 1

    def __post_init__(self) -> None:
        if not 1 <= self.x <= self.n_per_gender:
            raise ValueError(f"need 1 <= x <= n_per_gender, got x={self.x}, n={self.n_per_gender}")
        if not 0 <= as_fraction(self.alpha) <= 1:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be positive")


@dataclass(frozen=True)
class FairnessOutcome:
    positives_m: int
    total_m: int
    positives_f: int
    total_f: int
    alpha: Fraction
    fair: bool

    @property
    def pos_m(self) -> float:
        return self.positives_m / self.total_m

    @property
    def pos_f(self) -> float:
        return self.positives_f / self.total_f

    @property
    def gap(self) -> Fraction:
        return abs(Fraction(self.positives_f, self.total_f) - Fraction(self.positives_m, self.total_m))


def check_distributional_fairness(
    male_labels: Sequence[Sentiment], female_labels: Sequence[Sentiment], alpha: float | Fraction = 0.10
) -> FairnessOutcome:
    if not male_labels or not female_labels:
        raise ValueError("both gender groups need at least one prediction")
    tol = as_fraction(alpha)
    pm = sum(1 for lab in male_labels if Sentiment.coerce(lab) is Sentiment.POSITIVE)
    pf = sum(1 for lab in female_labels if Sentiment.coerce(lab) is Sentiment.POSITIVE)
    nm, nf = len(male_labels), len(female_labels)
    # |pf/nf - pm/nm| <= tol, cross-multiplied to stay in integers
    fair = abs(pf * nm - pm * nf) * tol.denominator <= tol.numerator * nm * nf
    return FairnessOutcome(pm, nm, pf, nf, tol, fair)


@dataclass(frozen=True)
class Verdict:
    prediction: Sentiment
    stage: Stage
    sa_calls: int
    n_mutants: int = 0
    outcome: FairnessOutcome | None = None
    diagnostic: str | None = None
    elapsed_ms: float = field(default=0.0, compare=False)

    @property
    def checkable(self) -> bool:
        return self.stage is not Stage.NOT_CHECKABLE

    @property
    def biased(self) -> bool | None:
        if not self.checkable:
            return None
        return self.stage is Stage.STEP2_BIASED

    @property
    def escalated(self) -> bool:
        return self.stage in (Stage.STEP2_FAIR, Stage.STEP2_BIASED)


class PredictorError(RuntimeError):
    """The SA backend failed mid-verification; ``sa_calls`` counts mutant queries that completed."""

    def __init__(self, message: str, sa_calls: int = 0, prediction: Sentiment | None = None):
        super().__init__(message)
        self.sa_calls = sa_calls
        self.prediction = prediction

    def __reduce__(self):
        return type(self), (str(self), self.sa_calls, self.prediction)


class _Queries:
    """Mutant label cache for a single verification; each mutant is queried at most once."""

    def __init__(self, predict: Callable[[str], Any], texts: Sequence[str], max_parallel: int):
        self.predict = predict
        self.texts = texts
        self.labels: list[Sentiment | None] = [None] * len(texts)
        self.max_parallel = max_parallel
        self.calls = 0
        self._lock = threading.Lock()

    def _one(self, i: int) -> None:
        label = Sentiment.coerce(self.predict(self.texts[i]))
        with self._lock:
            self.labels[i] = label
            self.calls += 1

    def fill(self, indices: Iterable[int]) -> list[Sentiment]:
        indices = list(indices)
        todo = [i for i in indices if self.labels[i] is None]
        if self.max_parallel == 1 or len(todo) < 2:
            for i in todo:
                self._one(i)
        else:
            with ThreadPoolExecutor(max_workers=self.max_parallel) as pool:
                futures = [pool.submit(self._one, i) for i in todo]
            for fut in futures:
                fut.result()
        return [self.labels[i] for i in indices]  # type: ignore[misc]


class Verifier:
    """Wraps a ``predict(text)`` function with a runtime fairness check."""

    def __init__(
        self,
        predict: Callable[[str], Any],
        x: int = 4,
        alpha: float = 0.10,
        n_per_gender: int = 30,
        seed: int = 0,
        *,
        max_parallel: int = 1,
        lexicon: NameLexicon | None = None,
        table: PronounTable = DEFAULT_PRONOUNS,
        config: VerifierConfig | None = None,
        max_length: int = MAX_TEXT_LENGTH,
    ):
        self.predict = predict
        self.config = config or VerifierConfig(x, alpha, n_per_gender, seed, max_parallel)
        self.lexicon = lexicon or default_lexicon()
        self.table = table
        self.max_length = max_length

    def with_config(self, **changes: Any) -> "Verifier":
        return Verifier(
            self.predict,
            config=replace(self.config, **changes),
            lexicon=self.lexicon,
            table=self.table,
            max_length=self.max_length,
        )

    def verify(self, text: str) -> tuple[Sentiment, bool]:
        verdict = self.check(text)
        return verdict.prediction, bool(verdict.biased)

    def check(self, text: str) -> Verdict:
        return self._run(text, two_step=True)

    def check_full(self, text: str) -> Verdict:
        return self._run(text, two_step=False)

    def _run(self, text: str, two_step: bool) -> Verdict:
        cfg = self.config
        t0 = time.perf_counter()

        def elapsed() -> float:
            return (time.perf_counter() - t0) * 1000.0

        try:
            original = Sentiment.coerce(self.predict(text))
        except Exception as exc:
            raise PredictorError(f"prediction of original text failed: {exc}", sa_calls=0) from exc

        try:
            template = extract_template(tokenize(text, self.max_length), self.lexicon, self.table)
            if not template.checkable:
                return Verdict(original, Stage.NOT_CHECKABLE, 0, diagnostic="no protected tokens", elapsed_ms=elapsed())
            seed = text_seed(cfg.seed, text)
            mutants = generate_mutants(template, self.lexicon, self.table, cfg.n_per_gender, seed)
        except (TextTooLong, MutationError) as exc:
            return Verdict(original, Stage.NOT_CHECKABLE, 0, diagnostic=str(exc), elapsed_ms=elapsed())

        n_m, n_f = len(mutants.male), len(mutants.female)
        queries = _Queries(self.predict, [m.text for m in mutants.male + mutants.female], cfg.max_parallel)
        try:
            if two_step:
                # sample fixed before any mutant is queried
                rng = random.Random(derive_seed("step1", seed))
                sample = sorted(rng.sample(range(n_m), min(cfg.x, n_m)))
                sample += [n_m + j for j in sorted(rng.sample(range(n_f), min(cfg.x, n_f)))]
                if len(set(queries.fill(sample))) == 1:
                    return Verdict(original, Stage.STEP1_PASS, queries.calls, n_m + n_f, elapsed_ms=elapsed())
            labels = queries.fill(range(n_m + n_f))
        except Exception as exc:
            raise PredictorError(
                f"mutant prediction failed after {queries.calls} calls: {exc}",
                sa_calls=queries.calls,
                prediction=original,
            ) from exc

        outcome = check_distributional_fairness(labels[:n_m], labels[n_m:], cfg.alpha)
        stage = Stage.STEP2_FAIR if outcome.fair else Stage.STEP2_BIASED
        return Verdict(original, stage, queries.calls, n_m + n_f, outcome, elapsed_ms=elapsed())


def verify(
    text: str,
    predictor: Callable[[str], Any],
    config: VerifierConfig | None = None,
    lexicon: NameLexicon | None = None,
) -> Verdict:
    return Verifier(predictor, config=config or VerifierConfig(), lexicon=lexicon).check(text)


def verify_full(
    text: str,
    predictor: Callable[[str], Any],
    config: VerifierConfig | None = None,
    lexicon: NameLexicon | None = None,
) -> Verdict:
    return Verifier(predictor, config=config or VerifierConfig(), lexicon=lexicon).check_full(text)
