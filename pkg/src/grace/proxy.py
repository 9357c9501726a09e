"""The HTTP forward proxy itself.

Browsers point their http proxy setting here; requests arrive in
absolute-URI form, get fetched from the origin, run through the user's
transformation chain when one matches, and return rewritten. Anything
that cannot be transformed is passed through byte-identically (hop-by-hop
headers aside), because a broken conversion must never break browsing.
"""

from __future__ import annotations

import base64
import gzip
import http.client
import logging
import socket
import threading
import zlib
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import urlsplit, urlunsplit

from .errors import StartupError, UpstreamError
from .rules import ProfileSet

logger = logging.getLogger(__name__)

HOP_BY_HOP = frozenset(
    {
        "connection",
        "keep-alive",
        "proxy-authenticate",
        "proxy-authorization",
        "proxy-connection",
        "te",
        "trailer",
        "trailers",
        "transfer-encoding",
        "upgrade",
    }
)

# proxy-control headers that must not leak to the origin
CONTROL_HEADERS = frozenset({"x-grace-profile"})

BODYLESS_STATUSES = frozenset({204, 304})


@dataclass(frozen=True)
class RequestContext:
    method: str
    absolute_url: str
    headers: dict[str, str]
    profile_id: str
    started_at: float


@dataclass(frozen=True)
class UpstreamResponse:
    status: int
    reason: str
    headers: tuple[tuple[str, str], ...]
    body: bytes

    def header(self, name: str) -> str | None:
        name = name.lower()
        for k, v in self.headers:
            if k.lower() == name:
                return v
        return None


def strip_hop_by_hop(items) -> list[tuple[str, str]]:
    """Remove hop-by-hop headers, including any named by Connection."""
    extra = set()
    for k, v in items:
        if k.lower() == "connection":
            extra.update(t.strip().lower() for t in v.split(",") if t.strip())
    return [
        (k, v)
        for k, v in items
        if k.lower() not in HOP_BY_HOP and k.lower() not in extra
    ]


def resolve_profile(headers, cfg, profiles: ProfileSet) -> str:
    """Pick the profile for a request: proxy-auth username, then the
    X-Grace-Profile header, then the configured default, then the empty
    profile. Names that do not resolve fall through to the next source."""
    auth = headers.get("Proxy-Authorization", "")
    if auth.lower().startswith("basic "):
        try:
            decoded = base64.b64decode(auth[6:].strip()).decode("utf-8", "replace")
            user = decoded.split(":", 1)[0]
        except (ValueError, UnicodeDecodeError):
            user = ""
        if user:
            if profiles.get(user) is not None:
                return user
            logger.info("proxy-auth user %r has no profile", user)
    requested = (headers.get("X-Grace-Profile") or "").strip()
    if requested:
        if profiles.get(requested) is not None:
            return requested
        logger.info("requested profile %r does not exist", requested)
    default = cfg.default_profile
    if default and profiles.get(default) is not None:
        return default
    return ""


def decompress_body(body: bytes, encoding: str) -> bytes:
    """Undo a gzip/deflate Content-Encoding. Raises ValueError for
    encodings the proxy cannot reverse."""
    enc = (encoding or "").strip().lower()
    if enc in ("", "identity"):
        return body
    try:
        if enc in ("gzip", "x-gzip"):
            return gzip.decompress(body)
        if enc == "deflate":
            try:
                return zlib.decompress(body)
            except zlib.error:
                return zlib.decompress(body, -zlib.MAX_WBITS)
    except (OSError, zlib.error, EOFError) as exc:
        raise ValueError(f"corrupt {enc} body: {exc}") from exc
    raise ValueError(f"unsupported content-encoding {enc!r}")


def fetch_upstream(ctx: RequestContext, cfg, body: bytes | None = None) -> UpstreamResponse:
    """Forward the request to the origin and buffer the whole response.

    Client hop-by-hop and proxy-control headers are dropped; Host is
    derived from the absolute URL."""
    parts = urlsplit(ctx.absolute_url)
    host = parts.hostname or ""
    port = parts.port or 80
    path = urlunsplit(("", "", parts.path or "/", parts.query, ""))
    out_headers = {}
    for k, v in strip_hop_by_hop(ctx.headers.items()):
        if k.lower() in CONTROL_HEADERS or k.lower() == "host":
            continue
        out_headers[k] = v
    conn = http.client.HTTPConnection(host, port, timeout=cfg.upstream_timeout_ms / 1000.0)
    try:
        try:
            conn.request(ctx.method, path or "/", body=body, headers=out_headers)
            resp = conn.getresponse()
            data = resp.read()
        except socket.gaierror as exc:
            raise UpstreamError("dns", str(exc)) from exc
        except (TimeoutError, socket.timeout) as exc:
            raise UpstreamError("timeout", str(exc)) from exc
        except ConnectionError as exc:
            raise UpstreamError("connect", str(exc)) from exc
        except http.client.HTTPException as exc:
            raise UpstreamError("protocol", str(exc)) from exc
        except OSError as exc:
            raise UpstreamError("connect", str(exc)) from exc
    finally:
        conn.close()
    return UpstreamResponse(
        status=resp.status,
        reason=resp.reason,
        headers=tuple(resp.headers.items()),
        body=data,
    )


class ProxyHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        logger.debug("%s %s", self.address_string(), fmt % args)

    @property
    def app(self):
        return self.server.app

    def do_CONNECT(self):
        self._plain_response(501, "https tunneling is not supported")

    def do_GET(self):
        self._proxy("GET")

    def do_HEAD(self):
        self._proxy("HEAD")

    def do_POST(self):
        self._proxy("POST")

    def _proxy(self, method: str):
        import time

        parts = urlsplit(self.path)
        if parts.scheme != "http" or not parts.netloc:
            self._plain_response(
                400, "proxy requests must use an absolute http:// URL"
            )
            return
        headers = dict(self.headers.items())
        profile_id = resolve_profile(self.headers, self.app.config, self.app.profiles)
        ctx = RequestContext(
            method=method,
            absolute_url=self.path,
            headers=headers,
            profile_id=profile_id,
            started_at=time.time(),
        )
        body = None
        if method == "POST":
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length) if length > 0 else b""
        try:
            upstream = fetch_upstream(ctx, self.app.config, body)
        except UpstreamError as exc:
            self._plain_response(
                502,
                f"origin fetch failed: {exc.kind}",
                extra=[("X-Grace-Error", f"upstream-{exc.kind}")],
            )
            return

        if method == "GET" and 200 <= upstream.status < 300:
            outcome = self.app.transform_response(ctx, upstream)
        else:
            outcome = None
        self._relay(method, upstream, outcome)

    def _relay(self, method: str, upstream: UpstreamResponse, outcome):
        headers = strip_hop_by_hop(upstream.headers)
        body = upstream.body
        extra: list[tuple[str, str]] = []
        if outcome is not None:
            body = outcome.body
            if outcome.transformed:
                drop = {"content-type", "content-encoding", "content-length"}
                headers = [(k, v) for k, v in headers if k.lower() not in drop]
                extra.append(("Content-Type", outcome.content_type))
                extra.append(
                    (
                        "X-Grace-Transformed",
                        f"{','.join(outcome.chain_ids)}; from={outcome.initial_mime}",
                    )
                )
            if outcome.error_header:
                extra.append(("X-Grace-Error", outcome.error_header))

        via_parts = [v for k, v in headers if k.lower() == "via"] + ["grace"]
        headers = [(k, v) for k, v in headers if k.lower() != "via"]
        extra.append(("Via", ", ".join(via_parts)))

        bodyless = method == "HEAD" or upstream.status in BODYLESS_STATUSES or upstream.status < 200
        if not bodyless:
            headers = [(k, v) for k, v in headers if k.lower() != "content-length"]
            extra.append(("Content-Length", str(len(body))))

        self.send_response_only(upstream.status, upstream.reason)
        for k, v in headers + extra:
            self.send_header(k, v)
        self.end_headers()
        if not bodyless and body:
            self.wfile.write(body)

    def _plain_response(self, status: int, message: str, extra=()):
        payload = (message + "\n").encode("utf-8")
        self.send_response_only(status)
        self.send_header("Content-Type", "text/plain; charset=utf-8")
        self.send_header("Content-Length", str(len(payload)))
        self.send_header("Via", "grace")
        for k, v in extra:
            self.send_header(k, v)
        self.end_headers()
        if self.command != "HEAD":
            self.wfile.write(payload)


class _ProxyHTTPServer(ThreadingHTTPServer):
    daemon_threads = True
    # Default backlog of 5 drops connections under concurrent load.
    request_queue_size = 128


class ProxyServer:
    """Threaded proxy listener bound to the configured address."""

    def __init__(self, app, host: str | None = None, port: int | None = None):
        cfg = app.config
        host = cfg.listen_host if host is None else host
        port = cfg.listen_port if port is None else port
        try:
            self._httpd = _ProxyHTTPServer((host, port), ProxyHandler)
        except OSError as exc:
            raise StartupError(f"cannot bind proxy to {host}:{port}: {exc}") from exc
        self._httpd.app = app  # type: ignore[attr-defined]
        # A short poll interval keeps shutdown() from stalling half a second.
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True
        )

    @property
    def address(self) -> tuple[str, int]:
        return self._httpd.server_address[:2]

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def start(self) -> "ProxyServer":
        self._thread.start()
        return self

    def stop(self):
        self._httpd.shutdown()
        self._httpd.server_close()

    def serve_forever(self):
        self._httpd.serve_forever()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
