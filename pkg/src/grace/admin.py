"""Management REST API and static UI host.

Runs on its own listen address (loopback by default, unauthenticated, so
keep it off public interfaces). JSON in, JSON out; every error body is
{"error": <machine code>, "detail": <human text>}.
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, unquote, urlsplit

from .errors import (
    AmbiguousProfileError,
    GraceError,
    InvalidPatchError,
    NotFoundError,
    StartupError,
    UnknownRuleError,
    VersionConflictError,
)

logger = logging.getLogger(__name__)

MIME_BY_SUFFIX = {
    ".html": "text/html; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".map": "application/json",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


class _ApiError(Exception):
    def __init__(self, status: int, code: str, detail: str, extra: dict | None = None):
        super().__init__(detail)
        self.status = status
        self.code = code
        self.detail = detail
        self.extra = extra or {}


def _map_error(exc: GraceError) -> _ApiError:
    if isinstance(exc, NotFoundError):
        return _ApiError(404, "not-found", str(exc))
    if isinstance(exc, VersionConflictError):
        return _ApiError(
            409, "conflict", str(exc), {"version": exc.current_version}
        )
    if isinstance(exc, UnknownRuleError):
        return _ApiError(422, "unknown-rule", str(exc))
    if isinstance(exc, AmbiguousProfileError):
        return _ApiError(422, "ambiguous-source", str(exc))
    if isinstance(exc, InvalidPatchError):
        return _ApiError(422, "invalid-patch", str(exc))
    return _ApiError(500, "internal", str(exc))


class AdminHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        logger.debug("%s %s", self.address_string(), fmt % args)

    @property
    def app(self):
        return self.server.app

    # --- dispatch -----------------------------------------------------

    def do_GET(self):
        self._dispatch("GET")

    def do_PUT(self):
        self._dispatch("PUT")

    def do_PATCH(self):
        self._dispatch("PATCH")

    def do_DELETE(self):
        self._dispatch("DELETE")

    def do_POST(self):
        self._dispatch("POST")

    def _dispatch(self, method: str):
        parts = urlsplit(self.path)
        path = parts.path
        query = parse_qs(parts.query)
        try:
            if path == "/api/transformations" and method == "GET":
                self._send_json(200, self.app.list_transformations())
            elif path == "/api/profiles" and method == "GET":
                self._send_json(200, self.app.list_profiles())
            elif path.startswith("/api/profiles/"):
                self._profile_route(method, unquote(path[len("/api/profiles/"):]), query)
            elif path == "/api/events" and method == "GET":
                self._events_route(query)
            elif path == "/api/reload" and method == "POST":
                self._reload_route()
            elif path == "/ui" or path.startswith("/ui/"):
                if method != "GET":
                    raise _ApiError(405, "method-not-allowed", f"{method} not allowed here")
                self._ui_route(path)
            elif path == "/":
                self._send_redirect("/ui/")
            elif path.startswith("/api/"):
                raise _ApiError(404, "not-found", f"no route {path}")
            else:
                raise _ApiError(404, "not-found", f"no route {path}")
        except _ApiError as exc:
            self._send_error(exc)
        except GraceError as exc:
            self._send_error(_map_error(exc))
        except Exception as exc:  # pragma: no cover - last-resort guard
            logger.exception("admin request failed")
            self._send_error(_ApiError(500, "internal", str(exc)))

    # --- routes ----------------------------------------------------------

    def _profile_route(self, method: str, profile_id: str, query: dict):
        if not profile_id or "/" in profile_id:
            raise _ApiError(404, "not-found", "profile ids contain no slashes")
        if method == "GET":
            self._send_json(200, self.app.get_profile_doc(profile_id))
        elif method == "PUT":
            body = self._read_json()
            rules = body.get("rules")
            if not isinstance(rules, list) or not all(isinstance(r, str) for r in rules):
                raise _ApiError(422, "invalid-request", "body must carry rules: [id, ...]")
            version = self._version_of(body)
            self._send_json(200, self.app.put_profile(profile_id, rules, version))
        elif method == "PATCH":
            body = self._read_json()
            add = body.get("add", [])
            remove = body.get("remove", [])
            for name, val in (("add", add), ("remove", remove)):
                if not isinstance(val, list) or not all(isinstance(r, str) for r in val):
                    raise _ApiError(422, "invalid-request", f"{name} must be a list of rule ids")
            version = self._version_of(body)
            self._send_json(
                200, self.app.patch_profile(profile_id, add=add, remove=remove, version=version)
            )
        elif method == "DELETE":
            version = None
            if "version" in query:
                try:
                    version = int(query["version"][0])
                except ValueError:
                    raise _ApiError(422, "invalid-request", "version must be an integer")
            self.app.delete_profile(profile_id, version)
            self._send_json(200, {"deleted": profile_id})
        else:
            raise _ApiError(405, "method-not-allowed", f"{method} not allowed here")

    @staticmethod
    def _version_of(body: dict):
        version = body.get("version")
        if version is not None and not isinstance(version, int):
            raise _ApiError(422, "invalid-request", "version must be an integer")
        return version

    def _events_route(self, query: dict):
        try:
            limit = int(query.get("limit", ["100"])[0])
        except ValueError:
            raise _ApiError(422, "invalid-request", "limit must be an integer")
        since = None
        if "since" in query:
            try:
                since = float(query["since"][0])
            except ValueError:
                raise _ApiError(422, "invalid-request", "since must be a timestamp")
        try:
            events = self.app.events.list(limit, since)
        except ValueError as exc:
            raise _ApiError(422, "invalid-request", str(exc))
        self._send_json(200, [e.to_json() for e in events])

    def _reload_route(self):
        try:
            self.app.reload()
        except GraceError as exc:
            raise _ApiError(500, "reload-failed", str(exc))
        except OSError as exc:
            raise _ApiError(500, "reload-failed", str(exc))
        self._send_json(
            200,
            {
                "transformations": len(self.app.catalog),
                "profiles": len(list(self.app.profiles)),
            },
        )

    def _ui_route(self, path: str):
        ui_dir = self.app.config.ui_dir
        if ui_dir is None:
            raise _ApiError(404, "not-found", "no UI bundle configured")
        rel = path[len("/ui"):].lstrip("/") or "index.html"
        base = Path(ui_dir).resolve()
        target = (base / rel).resolve()
        # resolve() collapses any ../ segments; anything outside base is a
        # traversal attempt
        if base != target and base not in target.parents:
            raise _ApiError(404, "not-found", "no such asset")
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            raise _ApiError(404, "not-found", "no such asset")
        data = target.read_bytes()
        mime = MIME_BY_SUFFIX.get(target.suffix.lower(), "application/octet-stream")
        self._send_bytes(200, data, mime)

    # --- plumbing -----------------------------------------------------------

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length > 0 else b""
        if not raw:
            return {}
        try:
            body = json.loads(raw)
        except ValueError:
            raise _ApiError(400, "bad-json", "request body is not valid JSON")
        if not isinstance(body, dict):
            raise _ApiError(400, "bad-json", "request body must be a JSON object")
        return body

    def _send_json(self, status: int, payload):
        self._send_bytes(
            status,
            json.dumps(payload, indent=2).encode("utf-8") + b"\n",
            "application/json",
        )

    def _send_error(self, exc: _ApiError):
        doc = {"error": exc.code, "detail": exc.detail}
        doc.update(exc.extra)
        self._send_json(exc.status, doc)

    def _send_redirect(self, location: str):
        self.send_response_only(302)
        self.send_header("Location", location)
        self.send_header("Content-Length", "0")
        self.end_headers()

    def _send_bytes(self, status: int, data: bytes, mime: str):
        self.send_response_only(status)
        self.send_header("Content-Type", mime)
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Cache-Control", "no-store")
        self.end_headers()
        if self.command != "HEAD":
            self.wfile.write(data)


class _AdminHTTPServer(ThreadingHTTPServer):
    daemon_threads = True
    # Default backlog of 5 drops connections under concurrent load.
    request_queue_size = 128


class AdminServer:
    """Threaded management listener bound to the configured admin address."""

    def __init__(self, app, host: str | None = None, port: int | None = None):
        cfg = app.config
        host = cfg.admin_host if host is None else host
        port = cfg.admin_port if port is None else port
        try:
            self._httpd = _AdminHTTPServer((host, port), AdminHandler)
        except OSError as exc:
            raise StartupError(f"cannot bind admin API to {host}:{port}: {exc}") from exc
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

    def start(self) -> "AdminServer":
        self._thread.start()
        return self

    def stop(self):
        self._httpd.shutdown()
        self._httpd.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
