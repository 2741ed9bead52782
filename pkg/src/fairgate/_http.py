"""Small JSON-over-HTTP server base shared by the mock backend and the proxy."""
from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any


class JsonHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, format: str, *args: Any) -> None:  # noqa: A002
        pass

    def send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def read_text_field(self, max_length: int) -> str | None:
        """Parse ``{"text": ...}``; on failure send the error response and return None."""
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        try:
            payload = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            self.send_json(400, {"error": "request body must be UTF-8 JSON"})
            return None
        text = payload.get("text") if isinstance(payload, dict) else None
        if not isinstance(text, str):
            self.send_json(400, {"error": "missing string field 'text'"})
            return None
        if len(text) > max_length:
            self.send_json(413, {"error": f"text longer than {max_length} characters"})
            return None
        return text


class JsonServer(ThreadingHTTPServer):
    daemon_threads = True


class ServiceHandle:
    """A server running on a background thread."""

    def __init__(self, server: JsonServer):
        self.server = server
        self._thread = threading.Thread(target=server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def address(self) -> tuple[str, int]:
        host, port = self.server.server_address[:2]
        return str(host), int(port)

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def shutdown(self) -> None:
        self.server.shutdown()
        self.server.server_close()
        self._thread.join(timeout=5)

    def wait(self) -> None:
        self._thread.join()

    def __enter__(self) -> "ServiceHandle":
        return self

    def __exit__(self, *exc: object) -> None:
        self.shutdown()


def parse_address(value: str, default_host: str = "127.0.0.1") -> tuple[str, int]:
    host, sep, port = value.rpartition(":")
    if not sep:
        return default_host, int(value)
    return host or default_host, int(port)
