"""HTTP sidecar that fronts an SA backend and annotates each prediction.

The proxy never changes or withholds the backend's label. It adds a bias
verdict next to it, and writes one structured log line per flagged request.

    POST /predict {"text": ...} ->
        {"sentiment": "positive"|"negative",
         "bias_checked": bool,
         "biased": bool|null,
         "details": {"stage": str, "pos_m": float|null, "pos_f": float|null,
                     "sa_calls": int, "elapsed_ms": float}}
    GET /healthz -> config echo plus backend reachability

``sa_calls`` counts mutant queries; each request also makes one backend
call for the original text.
"""
from __future__ import annotations

import dataclasses
import json
import logging
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from fairgate._http import JsonHandler, JsonServer, ServiceHandle
from fairgate.extraction import MAX_TEXT_LENGTH
from fairgate.lexicon import default_lexicon, load_lexicon
from fairgate.sa_client import BackendError, HttpBackend
from fairgate.verifier import PredictorError, Verdict, Verifier, VerifierConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

MODES = ("two_step", "full", "off")
ENV_PREFIX = "FAIRGATE_"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProxyConfig:
    backend_url: str
    mode: str = "two_step"
    x: int = 4
    alpha: float = 0.10
    n_per_gender: int = 30
    seed: int = 0
    lexicon_path: str | None = None
    max_parallel_backend_calls: int = 4
    backend_timeout: float = 10.0
    backend_retries: int = 2

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        try:
            self.verifier_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def verifier_config(self) -> VerifierConfig:
        return VerifierConfig(
            x=self.x,
            alpha=self.alpha,
            n_per_gender=self.n_per_gender,
            seed=self.seed,
            max_parallel=self.max_parallel_backend_calls,
        )


def _convert(name: str, kind: Any, value: Any) -> Any:
    if value is None:
        return None
    kind = str(kind)
    try:
        if kind.startswith("int"):
            if isinstance(value, bool):
                raise ValueError
            return int(value)
        if kind.startswith("float"):
            return float(value)
        if not isinstance(value, str):
            raise ValueError
        return value
    except ValueError:
        raise ConfigError(f"bad value for {name}: {value!r}") from None


def load_proxy_config(
    path: str | Path | None = None, env: Mapping[str, str] | None = None, **overrides: Any
) -> ProxyConfig:
    """Read a flat TOML file, then apply ``FAIRGATE_<KEY>`` environment overrides."""
    env = os.environ if env is None else env
    data: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read proxy config {path}: {exc}") from exc
    fields = {f.name: f.type for f in dataclasses.fields(ProxyConfig)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for name in fields:
        key = ENV_PREFIX + name.upper()
        if key in env:
            data[name] = env[key]
    data.update({k: v for k, v in overrides.items() if v is not None})
    if "backend_url" not in data:
        raise ConfigError("backend_url is required")
    values = {name: _convert(name, fields[name], value) for name, value in data.items()}
    try:
        return ProxyConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def response_body(sentiment: str, verdict: Verdict | None, elapsed_ms: float) -> dict:
    if verdict is None:
        return {
            "sentiment": sentiment,
            "bias_checked": False,
            "biased": None,
            "details": {"stage": "off", "pos_m": None, "pos_f": None, "sa_calls": 0, "elapsed_ms": elapsed_ms},
        }
    outcome = verdict.outcome
    return {
        "sentiment": sentiment,
        "bias_checked": verdict.checkable,
        "biased": verdict.biased,
        "details": {
            "stage": verdict.stage.value,
            "pos_m": outcome.pos_m if outcome else None,
            "pos_f": outcome.pos_f if outcome else None,
            "sa_calls": verdict.sa_calls,
            "elapsed_ms": elapsed_ms,
        },
    }


class ProxyServer(JsonServer):
    def __init__(self, address: tuple[str, int], config: ProxyConfig):
        super().__init__(address, _ProxyHandler)
        self.config = config
        self.backend = HttpBackend(config.backend_url, config.backend_timeout, config.backend_retries)
        lexicon = load_lexicon(config.lexicon_path) if config.lexicon_path else default_lexicon()
        self.verifier = Verifier(self.backend, config=config.verifier_config(), lexicon=lexicon)

    def handle_predict(self, text: str) -> tuple[int, dict]:
        t0 = time.perf_counter()
        mode = self.config.mode
        try:
            if mode == "off":
                label = self.backend(text)
                return 200, response_body(label.value, None, (time.perf_counter() - t0) * 1000.0)
            verdict = self.verifier.check(text) if mode == "two_step" else self.verifier.check_full(text)
        except (PredictorError, BackendError) as exc:
            calls = getattr(exc, "sa_calls", 0)
            log.error("backend failure: %s", exc)
            return 502, {"error": f"SA backend failure: {exc}", "details": {"sa_calls": calls}}
        body = response_body(verdict.prediction.value, verdict, verdict.elapsed_ms)
        if verdict.biased:
            log.warning(
                json.dumps(
                    {
                        "event": "biased_prediction",
                        "sentiment": body["sentiment"],
                        "pos_m": body["details"]["pos_m"],
                        "pos_f": body["details"]["pos_f"],
                        "sa_calls": verdict.sa_calls,
                        "text_chars": len(text),
                    }
                )
            )
        return 200, body

    def health(self) -> dict:
        cfg = self.config
        return {
            "status": "ok",
            "mode": cfg.mode,
            "x": cfg.x,
            "alpha": cfg.alpha,
            "n_per_gender": cfg.n_per_gender,
            "backend": "reachable" if self.backend.reachable() else "unreachable",
        }


class _ProxyHandler(JsonHandler):
    server: ProxyServer

    def do_POST(self) -> None:
        if self.path != "/predict":
            self.send_json(404, {"error": f"no route {self.path}"})
            return
        text = self.read_text_field(MAX_TEXT_LENGTH)
        if text is None:
            return
        status, body = self.server.handle_predict(text)
        self.send_json(status, body)

    def do_GET(self) -> None:
        if self.path == "/healthz":
            self.send_json(200, self.server.health())
        else:
            self.send_json(404, {"error": f"no route {self.path}"})


def serve(config: ProxyConfig, address: tuple[str, int] = ("127.0.0.1", 0)) -> ServiceHandle:
    server = ProxyServer(address, config)
    log.info("proxy listening on %s:%s -> %s (mode=%s)", *server.server_address[:2], config.backend_url, config.mode)
    return ServiceHandle(server)
