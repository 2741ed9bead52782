import json
import math
import threading
import urllib.error
import urllib.request
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DEE_SNIDER_TEXT
from fairgate.harness import gen_corpus
from fairgate.sa_client import (
    BackendError,
    HttpBackend,
    InProcessBackend,
    MalformedResponse,
    MockBackend,
    MockBiasConfig,
    MockMode,
    predict,
    run_mock_server,
)
from fairgate.verifier import Sentiment


def post(url, payload, raw=None):
    data = raw if raw is not None else json.dumps(payload).encode("utf-8")
    req = urllib.request.Request(url, data=data, headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=5) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read())


@pytest.fixture(scope="module")
def stochastic_server():
    config = MockBiasConfig(mode=MockMode.STOCHASTIC_FLIP, p=0.4, female_penalty=1, seed=5)
    with run_mock_server(config, ("127.0.0.1", 0)) as handle:
        yield config, handle


def test_blind_keyword_score():
    backend = InProcessBackend(MockBackend())
    assert predict(backend, "a real feel good film") is Sentiment.POSITIVE
    assert predict(backend, "a boring film") is Sentiment.NEGATIVE
    # ties go negative
    assert predict(backend, "a film") is Sentiment.NEGATIVE
    with pytest.raises(ValueError):
        predict(backend, "")


def test_gender_flip_on_dee_snider():
    flip = MockBackend(MockBiasConfig(mode=MockMode.GENDER_FLIP))
    male = DEE_SNIDER_TEXT.replace("Dee Snider", "James")
    female = DEE_SNIDER_TEXT.replace("Dee Snider", "Anne").replace(" he ", " she ").replace(" his ", " her ")
    assert flip(male) is Sentiment.POSITIVE
    assert flip(female) is Sentiment.NEGATIVE


def test_gender_flip_ignores_content():
    flip = MockBackend(MockBiasConfig(mode=MockMode.GENDER_FLIP))
    assert flip("James was awful, a boring waste.") is Sentiment.POSITIVE
    assert flip("Anne was great, wonderful, superb.") is Sentiment.NEGATIVE
    assert flip("He met her.") is Sentiment.NEGATIVE
    # no gendered token: plain keyword label
    assert flip("a great film") is Sentiment.POSITIVE
    assert flip("a boring film") is Sentiment.NEGATIVE


def test_female_penalty_shifts_score():
    text_m, text_f = "James was good.", "Anne was good."
    plain = MockBackend(MockBiasConfig())
    penalised = MockBackend(MockBiasConfig(female_penalty=1))
    assert plain(text_m) is plain(text_f) is Sentiment.POSITIVE
    assert penalised(text_m) is Sentiment.POSITIVE
    assert penalised(text_f) is Sentiment.NEGATIVE


def test_smoke_server(stochastic_server):
    _, handle = stochastic_server
    status, body = post(handle.url + "/predict", {"text": "I am happy"})
    assert status == 200 and body["sentiment"] in ("positive", "negative")
    with urllib.request.urlopen(handle.url + "/healthz", timeout=5) as resp:
        assert json.loads(resp.read())["status"] == "ok"


def test_server_error_responses(stochastic_server):
    _, handle = stochastic_server
    assert post(handle.url + "/predict", {"txt": "x"})[0] == 400
    assert post(handle.url + "/predict", None, raw=b"{not json")[0] == 400
    assert post(handle.url + "/predict", {"text": 5})[0] == 400
    status, body = post(handle.url + "/predict", {"text": "a" * 100_001})
    assert status == 413 and "error" in body
    assert post(handle.url + "/elsewhere", {"text": "x"})[0] == 404


def test_transport_equivalence(stochastic_server):
    config, handle = stochastic_server
    local, remote = MockBackend(config), HttpBackend(handle.url)
    for text in gen_corpus(150, 0.7, seed=4) + ["Ünïcödé Anne “quotes” – dash", "her\nnew\tline"]:
        assert remote(text) is local(text)


@settings(max_examples=50, deadline=None)
@given(st.text(min_size=1, max_size=80))
def test_transport_equivalence_any_text(stochastic_server, text):
    config, handle = stochastic_server
    assert HttpBackend(handle.url)(text) is MockBackend(config)(text)


def test_stochastic_p0_equals_blind():
    blind = MockBackend(MockBiasConfig(female_penalty=1))
    p0 = MockBackend(MockBiasConfig(mode=MockMode.STOCHASTIC_FLIP, p=0.0, female_penalty=1, seed=3))
    for text in gen_corpus(500, 0.8, seed=8):
        assert blind(text) is p0(text)


def test_stochastic_flip_fraction():
    blind = MockBackend(MockBiasConfig())
    noisy = MockBackend(MockBiasConfig(mode=MockMode.STOCHASTIC_FLIP, p=0.3, seed=12))
    texts = [f"Anne review number {i} was good." for i in range(10_000)]
    flips = sum(blind(t) is not noisy(t) for t in texts)
    sigma = math.sqrt(0.3 * 0.7 / len(texts))
    assert abs(flips / len(texts) - 0.3) <= 3 * sigma


def test_male_texts_never_flip():
    blind = MockBackend(MockBiasConfig())
    noisy = MockBackend(MockBiasConfig(mode=MockMode.STOCHASTIC_FLIP, p=1.0))
    for i in range(200):
        text = f"James review {i} was good, he said."
        assert blind(text) is noisy(text)


def test_mock_determinism():
    cfg = MockBiasConfig(mode=MockMode.STOCHASTIC_FLIP, p=0.5, seed=99)
    texts = gen_corpus(100, 1.0, seed=1)
    assert [MockBackend(cfg)(t) for t in texts] == [MockBackend(cfg)(t) for t in texts]


def test_config_parse_and_file(tmp_path):
    cfg = MockBiasConfig.parse("stochastic_flip:p=0.25,seed=7,penalty=2")
    assert (cfg.mode, cfg.p, cfg.seed, cfg.female_penalty) == (MockMode.STOCHASTIC_FLIP, 0.25, 7, 2)
    assert MockBiasConfig.parse("gender_flip").mode is MockMode.GENDER_FLIP
    with pytest.raises(ValueError):
        MockBiasConfig.parse("stochastic_flip:q=1")
    with pytest.raises(ValueError):
        MockBiasConfig.parse("stochastic_flip:p=1.5")
    with pytest.raises(ValueError):
        MockBiasConfig.parse("sarcastic")

    path = tmp_path / "mock.toml"
    path.write_text('mode = "gender_flip"\nseed = 3\n[positive]\nGreat = 2\n[negative]\nbad = 1\n')
    cfg = MockBiasConfig.from_file(path)
    assert cfg.mode is MockMode.GENDER_FLIP and dict(cfg.positive) == {"great": 2}
    path.write_text("colour = 1\n")
    with pytest.raises(ValueError, match="unknown"):
        MockBiasConfig.from_file(path)


def test_http_backend_validation():
    with pytest.raises(ValueError):
        HttpBackend("http://x", timeout=0)
    with pytest.raises(ValueError):
        HttpBackend("http://x", retries=-1)


def _free_port():
    import socket

    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_unreachable_backend_raises_after_retries():
    backend = HttpBackend(f"http://127.0.0.1:{_free_port()}", timeout=1, retries=1, backoff=0.0)
    with pytest.raises(BackendError, match="2 attempts"):
        backend("Anne was good.")
    assert not backend.reachable()


class _Scripted(BaseHTTPRequestHandler):
    """Serves a fixed list of (status, body) responses in order."""

    def log_message(self, *args):
        pass

    def do_POST(self):
        self.rfile.read(int(self.headers["Content-Length"]))
        status, body = self.server.script.pop(0)
        data = body.encode()
        self.send_response(status)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


@pytest.fixture
def scripted():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _Scripted)
    server.script = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server, f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    server.server_close()


def test_retries_on_server_error(scripted):
    server, url = scripted
    server.script[:] = [(503, "{}"), (500, "{}"), (200, '{"sentiment": "negative"}')]
    assert HttpBackend(url, retries=2, backoff=0.0)("x") is Sentiment.NEGATIVE
    assert server.script == []


def test_client_error_not_retried(scripted):
    server, url = scripted
    server.script[:] = [(400, '{"error": "bad"}'), (200, '{"sentiment": "positive"}')]
    with pytest.raises(BackendError, match="400"):
        HttpBackend(url, retries=2, backoff=0.0)("x")
    assert len(server.script) == 1


@pytest.mark.parametrize("body", ['{"sentiment": "neutral"}', '{"label": "positive"}', "not json", "[]"])
def test_malformed_responses(scripted, body):
    server, url = scripted
    server.script[:] = [(200, body)]
    with pytest.raises(MalformedResponse):
        HttpBackend(url, retries=0)("x")
