"""SA backends: in-process predictors, an HTTP JSON client, and a biased mock.

Wire protocol spoken by :class:`HttpBackend` and served by the mock::

    POST /predict   {"text": "..."}
    200             {"sentiment": "positive" | "negative"}
    400             {"error": "..."}        missing/invalid field
    413             {"error": "..."}        text over the length limit
"""
from __future__ import annotations

import enum
import json
import logging
import os
import sys
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Union

from fairgate._http import JsonHandler, JsonServer, ServiceHandle, parse_address
from fairgate.extraction import MAX_TEXT_LENGTH, tokenize
from fairgate.lexicon import DEFAULT_PRONOUNS, Gender, NameLexicon, PronounTable, classify_token, default_lexicon
from fairgate.mutation import derive_seed
from fairgate.verifier import Sentiment

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)


class BackendError(RuntimeError):
    pass


class MalformedResponse(BackendError):
    pass


@dataclass(frozen=True)
class InProcessBackend:
    predictor: Callable[[str], Any]

    def __call__(self, text: str) -> Sentiment:
        return Sentiment.coerce(self.predictor(text))


@dataclass(frozen=True)
class HttpBackend:
    base_url: str
    timeout: float = 10.0
    retries: int = 2
    backoff: float = 0.05

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.retries < 0:
            raise ValueError("retries must be non-negative")

    def _endpoint(self, path: str) -> str:
        return self.base_url.rstrip("/") + path

    def __call__(self, text: str) -> Sentiment:
        body = json.dumps({"text": text}).encode("utf-8")
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * attempt)
            req = urllib.request.Request(
                self._endpoint("/predict"), data=body, headers={"Content-Type": "application/json"}
            )
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    raw = resp.read()
            except urllib.error.HTTPError as exc:
                if exc.code < 500:
                    raise BackendError(f"backend rejected request: HTTP {exc.code}") from exc
                last = exc
                continue
            except (urllib.error.URLError, OSError) as exc:
                last = exc
                continue
            return _parse_prediction(raw)
        raise BackendError(f"backend unreachable after {self.retries + 1} attempts: {last}")

    def reachable(self) -> bool:
        try:
            with urllib.request.urlopen(self._endpoint("/healthz"), timeout=min(self.timeout, 2.0)):
                return True
        except urllib.error.HTTPError:
            return True  # something answered
        except (urllib.error.URLError, OSError):
            return False


def _parse_prediction(raw: bytes) -> Sentiment:
    try:
        payload = json.loads(raw.decode("utf-8"))
        label = payload["sentiment"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise MalformedResponse(f"malformed backend response: {raw[:200]!r}") from exc
    if label not in ("positive", "negative"):
        raise MalformedResponse(f"unknown sentiment label {label!r}")
    return Sentiment(label)


BackendSpec = Union[InProcessBackend, HttpBackend]


def predict(spec: BackendSpec | Callable[[str], Any], text: str) -> Sentiment:
    if not text:
        raise ValueError("text must be non-empty")
    return Sentiment.coerce(spec(text))


class MockMode(enum.Enum):
    BLIND = "blind"
    GENDER_FLIP = "gender_flip"
    STOCHASTIC_FLIP = "stochastic_flip"


DEFAULT_POSITIVE = {
    "good": 1, "great": 2, "excellent": 2, "perfect": 2, "wonderful": 2, "brilliant": 2,
    "amazing": 2, "best": 2, "love": 2, "loved": 2, "enjoy": 1, "enjoyed": 1, "fun": 1,
    "funny": 1, "beautiful": 1, "fine": 1, "nice": 1, "happy": 1, "inspired": 1, "feel": 1,
    "touching": 1, "superb": 2, "solid": 1, "charming": 1,
}
DEFAULT_NEGATIVE = {
    "bad": 1, "poor": 1, "awful": 2, "terrible": 2, "worst": 2, "boring": 2, "waste": 2,
    "horrible": 2, "hate": 2, "hated": 2, "dull": 1, "weak": 1, "sad": 1, "nightmares": 1,
    "cringe": 1, "mess": 1, "annoying": 1, "bland": 1, "predictable": 1, "disappointing": 2,
}


@dataclass(frozen=True)
class MockBiasConfig:
    """Behaviour of the mock SA backend.

    The gender-blind label is the sign of a keyword-weight score (ties are
    negative). Texts containing any female name or pronoun lose
    ``female_penalty`` points first. ``gender_flip`` is total bias: any
    female-marked text is negative and any other gendered text positive,
    whatever its content. ``stochastic_flip`` flips the label of a
    female-marked text with probability ``p``, drawn from a generator keyed
    by (seed, text).
    """

    mode: MockMode = MockMode.BLIND
    p: float = 0.0
    female_penalty: int = 0
    seed: int = 0
    positive: Mapping[str, int] = field(default_factory=lambda: dict(DEFAULT_POSITIVE))
    negative: Mapping[str, int] = field(default_factory=lambda: dict(DEFAULT_NEGATIVE))

    def __post_init__(self) -> None:
        if isinstance(self.mode, str):
            object.__setattr__(self, "mode", MockMode(self.mode))
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"flip probability must lie in [0, 1], got {self.p}")
        if self.female_penalty < 0:
            raise ValueError("female_penalty must be non-negative")
        for table in (self.positive, self.negative):
            for word, weight in table.items():
                if not isinstance(weight, int) or weight < 0:
                    raise ValueError(f"keyword weight for {word!r} must be a non-negative integer")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "MockBiasConfig":
        known = {"mode", "p", "female_penalty", "seed", "positive", "negative"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown mock config keys: {sorted(unknown)}")
        kwargs = dict(data)
        for key in ("positive", "negative"):
            if key in kwargs:
                kwargs[key] = {str(w).lower(): v for w, v in kwargs[key].items()}
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "MockBiasConfig":
        with open(path, "rb") as fh:
            return cls.from_mapping(tomllib.load(fh))

    @classmethod
    def parse(cls, spec: str) -> "MockBiasConfig":
        """Parse ``mode[:key=value,...]``, e.g. ``stochastic_flip:p=0.3,seed=7,female_penalty=1``."""
        mode, _, rest = spec.partition(":")
        kwargs: dict[str, Any] = {"mode": mode.strip()}
        for item in filter(None, (s.strip() for s in rest.split(","))):
            key, _, value = item.partition("=")
            key = {"penalty": "female_penalty"}.get(key.strip(), key.strip())
            if key == "p":
                kwargs[key] = float(value)
            elif key in ("seed", "female_penalty"):
                kwargs[key] = int(value)
            else:
                raise ValueError(f"unknown mock parameter {key!r}")
        return cls(**kwargs)


@dataclass(frozen=True)
class MockBackend:
    config: MockBiasConfig = field(default_factory=MockBiasConfig)
    lexicon: NameLexicon = field(default_factory=default_lexicon)
    table: PronounTable = DEFAULT_PRONOUNS

    def score(self, text: str) -> tuple[int, set[Gender]]:
        """Keyword score and the genders the text mentions."""
        cfg = self.config
        score, marked = 0, set()
        for tok in tokenize(text, max_length=sys.maxsize).tokens:
            if not tok.is_word:
                continue
            word = tok.text.lower()
            score += cfg.positive.get(word, 0) - cfg.negative.get(word, 0)
            hit = classify_token(tok.text, self.lexicon, self.table)
            if hit is not None:
                marked.add(hit.gender)
        return score, marked

    def __call__(self, text: str) -> Sentiment:
        cfg = self.config
        score, marked = self.score(text)
        female = Gender.FEMALE in marked
        if cfg.mode is MockMode.GENDER_FLIP and marked:
            return Sentiment.NEGATIVE if female else Sentiment.POSITIVE
        if female:
            score -= cfg.female_penalty
        label = Sentiment.POSITIVE if score > 0 else Sentiment.NEGATIVE
        if female and cfg.mode is MockMode.STOCHASTIC_FLIP:
            if derive_seed("flip", cfg.seed, text) / 2**64 < cfg.p:
                label = label.flipped
        return label


class MockServer(JsonServer):
    def __init__(self, address: tuple[str, int], backend: MockBackend, max_length: int = MAX_TEXT_LENGTH):
        super().__init__(address, _MockHandler)
        self.backend = backend
        self.max_length = max_length
        self.request_count = 0
        self._count_lock = threading.Lock()

    def count(self) -> None:
        with self._count_lock:
            self.request_count += 1


class _MockHandler(JsonHandler):
    server: MockServer

    def do_POST(self) -> None:
        if self.path != "/predict":
            self.send_json(404, {"error": f"no route {self.path}"})
            return
        text = self.read_text_field(self.server.max_length)
        if text is None:
            return
        self.server.count()
        self.send_json(200, {"sentiment": self.server.backend(text).value})

    def do_GET(self) -> None:
        if self.path == "/healthz":
            self.send_json(200, {"status": "ok", "mode": self.server.backend.config.mode.value})
        else:
            self.send_json(404, {"error": f"no route {self.path}"})


class MockServerHandle(ServiceHandle):
    server: MockServer

    @property
    def request_count(self) -> int:
        return self.server.request_count

    def reset_count(self) -> None:
        with self.server._count_lock:
            self.server.request_count = 0


def run_mock_server(
    config: MockBiasConfig | None = None,
    address: tuple[str, int] | None = None,
    lexicon: NameLexicon | None = None,
) -> MockServerHandle:
    """Start the mock SA service on a background thread.

    ``address`` defaults to ``$SA_MOCK_ADDR`` (``host:port``), else an
    ephemeral port on localhost.
    """
    if address is None:
        address = parse_address(os.environ.get("SA_MOCK_ADDR", "127.0.0.1:0"))
    backend = MockBackend(config or MockBiasConfig(), lexicon or default_lexicon())
    server = MockServer(address, backend)
    log.info("mock SA backend listening on %s:%s", *server.server_address[:2])
    return MockServerHandle(server)
