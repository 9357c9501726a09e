"""Client for a remote conversion service, plus a stub implementation.

Wire protocol: POST {base_url}/convert with the payload as the request
body, Content-Type naming the source media type and Accept naming the
requested target. The service answers 200 with the converted bytes and a
Content-Type equal to the Accept value, or one of 415 (pair not
supported), 413 (payload too large), 422 (payload undecodable).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import urlsplit

import requests

from .errors import (
    PayloadTooLargeError,
    ProtocolError,
    RemoteError,
    StartupError,
    TimeoutError,
)
from .mediatype import normalize_media_type

DEFAULT_TIMEOUT_MS = 10_000
DEFAULT_MAX_PAYLOAD = 32 * 1024 * 1024


@dataclass(frozen=True)
class ExternalServiceConfig:
    base_url: str
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    max_payload: int = DEFAULT_MAX_PAYLOAD

    def __post_init__(self):
        scheme = urlsplit(self.base_url).scheme
        if scheme != "http":
            raise ValueError(f"conversion service URL must use http, got {scheme!r}")
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")


def remote_convert(
    cfg: ExternalServiceConfig, body: bytes, src: str, dst: str
) -> bytes:
    """Convert body from src to dst via the remote service. Oversize
    payloads are rejected before any network traffic."""
    if len(body) > cfg.max_payload:
        raise PayloadTooLargeError(
            f"payload of {len(body)} bytes exceeds cap of {cfg.max_payload}"
        )
    url = cfg.base_url.rstrip("/") + "/convert"
    try:
        resp = requests.post(
            url,
            data=body,
            headers={"Content-Type": src, "Accept": dst},
            timeout=cfg.timeout_ms / 1000.0,
        )
    except requests.Timeout as exc:
        raise TimeoutError(f"conversion service timed out after {cfg.timeout_ms}ms") from exc
    except requests.RequestException as exc:
        raise RemoteError(None, str(exc)) from exc
    if resp.status_code != 200:
        raise RemoteError(resp.status_code)
    got = normalize_media_type(resp.headers.get("Content-Type", ""))
    if got != normalize_media_type(dst):
        raise ProtocolError(
            f"service answered Content-Type {got!r}, requested {dst!r}"
        )
    return resp.content


class _StubServer(ThreadingHTTPServer):
    daemon_threads = True
    # Default backlog of 5 drops connections under concurrent load.
    request_queue_size = 128


class _StubHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    def do_POST(self):
        server = self.server  # ThreadingHTTPServer with stub attrs attached
        if self.path != "/convert":
            self._send(404, b"not found", "text/plain")
            return
        length = int(self.headers.get("Content-Length", "0"))
        if server.max_bytes is not None and length > server.max_bytes:
            self._send(413, b"payload too large", "text/plain")
            return
        body = self.rfile.read(length)
        if not body:
            self._send(422, b"empty payload", "text/plain")
            return
        src = normalize_media_type(self.headers.get("Content-Type", ""))
        dst = normalize_media_type(self.headers.get("Accept", ""))
        canned = server.mapping.get((src, dst))
        if canned is None:
            self._send(415, b"unsupported conversion pair", "text/plain")
            return
        server.note_request()
        self._send(200, canned, dst)

    def _send(self, status: int, body: bytes, content_type: str):
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class StubConversionServer:
    """In-process conversion service serving canned responses, for tests
    and local runs without a real remote converter."""

    def __init__(self, mapping, host: str = "127.0.0.1", port: int = 0, max_bytes=None):
        if not mapping:
            raise ValueError("mapping must be nonempty")
        self.mapping = {
            (normalize_media_type(src), normalize_media_type(dst)): bytes(payload)
            for src, dst, payload in mapping
        }
        self.max_bytes = max_bytes
        self._lock = threading.Lock()
        self._served = 0
        try:
            self._httpd = _StubServer((host, port), _StubHandler)
        except OSError as exc:
            raise StartupError(f"cannot bind stub conversion service: {exc}") from exc
        self._httpd.mapping = self.mapping  # type: ignore[attr-defined]
        self._httpd.max_bytes = self.max_bytes  # type: ignore[attr-defined]
        self._httpd.note_request = self.note_request  # type: ignore[attr-defined]
        # A short poll interval keeps shutdown() from stalling half a second.
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True
        )

    def note_request(self):
        with self._lock:
            self._served += 1

    @property
    def served(self) -> int:
        with self._lock:
            return self._served

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "StubConversionServer":
        self._thread.start()
        return self

    def stop(self):
        self._httpd.shutdown()
        self._httpd.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
