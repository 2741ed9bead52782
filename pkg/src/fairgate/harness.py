"""Batch evaluation: run a corpus through both verification modes and report.

Overhead is measured in extra backend calls (mutant queries beyond the one
original prediction), which is hardware-independent. Wall-clock time is
only logged.

``per_text.csv`` columns, in order::

    text_id, x, alpha, mode, checkable, stage, biased, pos_m, pos_f, calls
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from fairgate.extraction import TextTooLong, extract_template, tokenize
from fairgate.lexicon import Gender, NameLexicon, default_lexicon, render_name
from fairgate.verifier import PredictorError, Verdict, Verifier, VerifierConfig

log = logging.getLogger(__name__)

CSV_COLUMNS = ("text_id", "x", "alpha", "mode", "checkable", "stage", "biased", "pos_m", "pos_f", "calls")
EVAL_MODES = ("two_step", "full", "off")


class EvalAborted(RuntimeError):
    def __init__(self, message: str, report: "EvalReport"):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------- corpus


_NEUTRAL_OPENERS = [
    "This movie came out a few years ago.",
    "I watched this film last weekend.",
    "The director tried something different here.",
    "We saw it at a small local theater.",
    "The cast includes several newcomers.",
    "The film runs just under two hours.",
    "My friends picked this one for movie night.",
    "The trailer made it look like a thriller.",
]
_NAMED_OPENERS = [
    "{name} stars in this film.",
    "{name} plays the lead role.",
    "I watched it mainly because of {name}.",
    "The film follows {name} through one long summer.",
    "{name} directed this movie.",
    "Everyone kept talking about {name} in this one.",
]
_PRONOUN_FOLLOWUPS = [
    "{subj} is on screen for most of the story.",
    "The camera rarely leaves {obj}.",
    "I liked {poss} scenes the most.",
    "{subj} wrote the script {refl}.",
    "Critics compared {obj} to the original.",
]
_POSITIVE = [
    "The story is great.",
    "The music was wonderful.",
    "It was fun to watch.",
    "The acting is excellent.",
    "I enjoyed the ending.",
    "The photography is beautiful.",
    "A solid and charming picture.",
]
_NEGATIVE = [
    "The plot is boring.",
    "The ending was awful.",
    "What a waste of time.",
    "The dialogue felt weak.",
    "The pacing is dull.",
    "The effects look bad.",
    "The script is predictable.",
]
_NEUTRAL = [
    "It was released in the spring.",
    "The runtime is about ninety minutes.",
    "Most scenes were shot on location.",
    "The score uses a small orchestra.",
    "There is a sequel planned.",
]


def _pronouns(gender: Gender) -> dict[str, str]:
    if gender is Gender.MALE:
        return {"subj": "he", "obj": "him", "poss": "his", "refl": "himself"}
    return {"subj": "she", "obj": "her", "poss": "her", "refl": "herself"}


def _cap(s: str) -> str:
    return s[:1].upper() + s[1:]


def _content(rng: random.Random) -> list[str]:
    pool = _POSITIVE + _NEGATIVE + _NEUTRAL
    return rng.sample(pool, rng.randint(2, 4))


def gen_corpus(size: int, checkable_fraction: float, seed: int = 0, lexicon: NameLexicon | None = None) -> list[str]:
    """Synthetic reviews, exactly ``round(checkable_fraction * size)`` of which mention a named person."""
    if not 0 <= checkable_fraction <= 1:
        raise ValueError("checkable_fraction must lie in [0, 1]")
    lexicon = lexicon or default_lexicon()
    rng = random.Random(seed)
    n_checkable = round(checkable_fraction * size)
    checkable = set(rng.sample(range(size), n_checkable))
    texts = []
    for i in range(size):
        if i in checkable:
            gender = rng.choice((Gender.MALE, Gender.FEMALE))
            name = render_name(rng.choice(lexicon.names(gender)))
            parts = [rng.choice(_NAMED_OPENERS).format(name=name)]
            if rng.random() < 0.5:
                followup = rng.choice(_PRONOUN_FOLLOWUPS).format(**_pronouns(gender))
                parts.append(_cap(followup))
        else:
            parts = [rng.choice(_NEUTRAL_OPENERS)]
        parts += _content(rng)
        texts.append(" ".join(parts))
    return texts


def write_corpus(path: str | Path, texts: Iterable[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for text in texts:
            fh.write(text.replace("\n", " ") + "\n")


def read_corpus(path: str | Path) -> list[str]:
    """Newline-delimited texts, or JSONL with a ``text`` field (detected per file)."""
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if lines and all(ln.lstrip().startswith("{") for ln in lines):
        try:
            return [json.loads(ln)["text"] for ln in lines]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValueError(f"{path}: JSONL lines need a 'text' field") from exc
    return lines


# ---------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepPoint:
    x: int
    alpha: float


def _parse_values(key: str, raw: str) -> list[Any]:
    values: list[Any] = []
    for item in raw.split(","):
        item = item.strip()
        if ".." in item:
            lo, hi = item.split("..")
            values.extend(range(int(lo), int(hi) + 1))
        elif key == "x":
            values.append(int(item))
        else:
            values.append(float(item))
    return values


def parse_sweep(spec: str, base: VerifierConfig | None = None) -> list[SweepPoint]:
    """Parse ``"x=1..8;alpha=0.05,0.10,0.20"`` into the cross product of points."""
    base = base or VerifierConfig()
    grid: dict[str, list[Any]] = {"x": [base.x], "alpha": [base.alpha]}
    for part in filter(None, (p.strip() for p in spec.split(";"))):
        key, sep, raw = part.partition("=")
        key = key.strip()
        if not sep or key not in grid:
            raise ValueError(f"bad sweep component {part!r}")
        grid[key] = _parse_values(key, raw)
    return [SweepPoint(x, float(a)) for x, a in itertools.product(grid["x"], grid["alpha"])]


# ---------------------------------------------------------------- evaluation


@dataclass(frozen=True)
class TextRow:
    text_id: int
    x: int
    alpha: float
    mode: str
    checkable: bool
    stage: str
    biased: bool | None
    pos_m: float | None
    pos_f: float | None
    calls: int


@dataclass
class PointReport:
    x: int
    alpha: float
    n_texts: int
    n_checkable: int
    n_flagged_two_step: int | None
    n_flagged_full: int | None
    n_escalated: int | None
    n_missed: int | None
    n_soundness_violations: int | None
    calls_two_step: int | None
    calls_full: int | None
    avg_extra_calls_two_step: float | None
    avg_extra_calls_two_step_per_checkable: float | None
    avg_extra_calls_full: float | None
    avg_extra_calls_full_per_checkable: float | None
    overhead_reduction: float | None
    miss_rate: float | None


@dataclass
class EvalReport:
    n_texts: int
    n_checkable: int
    points: list[PointReport]
    config: dict
    complete: bool = True
    rows: list[TextRow] = field(default_factory=list, repr=False)

    @property
    def primary(self) -> PointReport:
        return self.points[0]

    def __getattr__(self, name: str) -> Any:
        # top-level metrics mirror the first sweep point
        if name in PointReport.__dataclass_fields__ and self.__dict__.get("points"):
            return getattr(self.points[0], name)
        raise AttributeError(name)

    def to_dict(self) -> dict:
        summary = asdict(self.points[0]) if self.points else {}
        summary.pop("x", None)
        summary.pop("alpha", None)
        return {
            "complete": self.complete,
            "config": self.config,
            **summary,
            "n_texts": self.n_texts,
            "n_checkable": self.n_checkable,
            "points": [asdict(p) for p in self.points],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow(
                [
                    r.text_id,
                    r.x,
                    repr(r.alpha),
                    r.mode,
                    int(r.checkable),
                    r.stage,
                    "" if r.biased is None else int(r.biased),
                    "" if r.pos_m is None else repr(r.pos_m),
                    "" if r.pos_f is None else repr(r.pos_f),
                    r.calls,
                ]
            )
        return buf.getvalue()

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json(), encoding="utf-8")
        (out / "per_text.csv").write_text(self.to_csv(), encoding="utf-8")


def _row(text_id: int, point: SweepPoint, mode: str, verdict: Verdict) -> TextRow:
    outcome = verdict.outcome
    return TextRow(
        text_id=text_id,
        x=point.x,
        alpha=point.alpha,
        mode=mode,
        checkable=verdict.checkable,
        stage=verdict.stage.value,
        biased=verdict.biased,
        pos_m=outcome.pos_m if outcome else None,
        pos_f=outcome.pos_f if outcome else None,
        calls=verdict.sa_calls,
    )


def _evaluate_text(
    job: tuple[int, str], verifiers: Sequence[tuple[SweepPoint, Verifier]], modes: Sequence[str]
) -> list[TextRow]:
    text_id, text = job
    rows = []
    for point, rv in verifiers:
        for mode in modes:
            if mode == "two_step":
                rows.append(_row(text_id, point, mode, rv.check(text)))
            elif mode == "full":
                rows.append(_row(text_id, point, mode, rv.check_full(text)))
            else:
                try:
                    rv.predict(text)
                except Exception as exc:
                    raise PredictorError(f"prediction of original text failed: {exc}", sa_calls=0) from exc
                rows.append(TextRow(text_id, point.x, point.alpha, "off", _is_checkable(rv, text), "off", None, None, None, 0))
    return rows


def _is_checkable(rv: Verifier, text: str) -> bool:
    try:
        return extract_template(tokenize(text, rv.max_length), rv.lexicon, rv.table).checkable
    except TextTooLong:
        return False


_WORKER_STATE: dict[str, Any] = {}


def _init_worker(verifiers: Sequence[tuple[SweepPoint, Verifier]], modes: Sequence[str]) -> None:
    _WORKER_STATE["verifiers"] = verifiers
    _WORKER_STATE["modes"] = modes


def _worker(job: tuple[int, str]) -> list[TextRow]:
    return _evaluate_text(job, _WORKER_STATE["verifiers"], _WORKER_STATE["modes"])


def _safe(num: float, den: float) -> float | None:
    return num / den if den else None


def summarize(rows: Sequence[TextRow], points: Sequence[SweepPoint], n_texts: int, modes: Sequence[str]) -> list[PointReport]:
    reports = []
    for point in points:
        mine = [r for r in rows if r.x == point.x and r.alpha == point.alpha]
        by_mode = {m: {r.text_id: r for r in mine if r.mode == m} for m in modes}
        any_mode = next(iter(by_mode.values())) if by_mode else {}
        n_checkable = sum(1 for r in any_mode.values() if r.checkable)

        def stats(mode: str) -> tuple[set[int], int, set[int]] | None:
            if mode not in by_mode:
                return None
            rs = by_mode[mode].values()
            flagged = {r.text_id for r in rs if r.biased}
            escalated = {r.text_id for r in rs if r.stage in ("step2_fair", "step2_biased")}
            return flagged, sum(r.calls for r in rs), escalated

        two, full = stats("two_step"), stats("full")
        both = two is not None and full is not None
        missed = len(full[0] - two[0]) if both else None
        reports.append(
            PointReport(
                x=point.x,
                alpha=point.alpha,
                n_texts=n_texts,
                n_checkable=n_checkable,
                n_flagged_two_step=len(two[0]) if two else None,
                n_flagged_full=len(full[0]) if full else None,
                n_escalated=len(two[2]) if two else None,
                n_missed=missed,
                n_soundness_violations=len(two[0] - full[0]) if both else None,
                calls_two_step=two[1] if two else None,
                calls_full=full[1] if full else None,
                avg_extra_calls_two_step=_safe(two[1], n_texts) if two else None,
                avg_extra_calls_two_step_per_checkable=_safe(two[1], n_checkable) if two else None,
                avg_extra_calls_full=_safe(full[1], n_texts) if full else None,
                avg_extra_calls_full_per_checkable=_safe(full[1], n_checkable) if full else None,
                overhead_reduction=(1 - two[1] / full[1]) if both and full[1] else None,
                miss_rate=missed / max(1, len(full[0])) if both else None,
            )
        )
    return reports


def run_eval(
    corpus: str | Path | Sequence[str],
    backend: Callable[[str], Any],
    config: VerifierConfig | None = None,
    sweep: Sequence[SweepPoint] | None = None,
    out_dir: str | Path | None = None,
    workers: int = 1,
    modes: Sequence[str] = ("two_step", "full"),
    lexicon: NameLexicon | None = None,
) -> EvalReport:
    """Verify every text at every sweep point, in each requested mode.

    Both modes share the configured seed, so they see identical mutant sets
    and the miss rate depends only on step-one sampling. With ``workers > 1``
    texts are spread over processes; the backend must then be picklable.
    """
    config = config or VerifierConfig()
    texts = read_corpus(corpus) if isinstance(corpus, (str, Path)) else list(corpus)
    points = list(sweep) if sweep else [SweepPoint(config.x, config.alpha)]
    for mode in modes:
        if mode not in EVAL_MODES:
            raise ValueError(f"unknown mode {mode!r}")
    lexicon = lexicon or default_lexicon()
    base = Verifier(backend, config=config, lexicon=lexicon)
    verifiers = [(p, base.with_config(x=p.x, alpha=p.alpha)) for p in points]
    report_config = {
        "n_per_gender": config.n_per_gender,
        "seed": config.seed,
        "modes": list(modes),
        "sweep": [asdict(p) for p in points],
    }

    t0 = time.perf_counter()
    jobs = list(enumerate(texts))
    rows: list[TextRow] = []
    complete = True
    error: Exception | None = None
    try:
        if workers > 1:
            with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(verifiers, modes)) as pool:
                for chunk in pool.map(_worker, jobs, chunksize=max(1, len(jobs) // (workers * 8))):
                    rows.extend(chunk)
        else:
            for job in jobs:
                rows.extend(_evaluate_text(job, verifiers, modes))
    except PredictorError as exc:
        complete, error = False, exc
    log.info("evaluated %d texts x %d points in %.1fs", len(texts), len(points), time.perf_counter() - t0)

    done = len({r.text_id for r in rows})
    report = EvalReport(
        n_texts=done,
        n_checkable=0,
        points=summarize(rows, points, done, modes),
        config=report_config,
        complete=complete,
        rows=rows,
    )
    report.n_checkable = report.points[0].n_checkable if report.points else 0
    if out_dir is not None:
        report.write(out_dir)
    if error is not None:
        raise EvalAborted(f"evaluation aborted after {done} of {len(texts)} texts: {error}", report) from error
    return report
