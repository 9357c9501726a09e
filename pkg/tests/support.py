"""Shared test servers and fixtures helpers."""

from __future__ import annotations

import io
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from PIL import Image


class StubOrigin:
    """Minimal origin server: maps request paths to canned responses and
    records every request it saw."""

    def __init__(self):
        self.routes: dict[str, tuple[int, list[tuple[str, str]], bytes]] = {}
        self.requests: list[tuple[str, str, dict]] = []
        self.delay_s = 0.0
        outer = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, *args):
                pass

            def _serve(self, send_body: bool):
                outer.requests.append(
                    (self.command, self.path, dict(self.headers.items()))
                )
                if outer.delay_s:
                    time.sleep(outer.delay_s)
                route = outer.routes.get(self.path)
                try:
                    if route is None:
                        body = b"not found"
                        self.send_response(404)
                        self.send_header("Content-Type", "text/plain")
                        self.send_header("Content-Length", str(len(body)))
                        self.end_headers()
                        if send_body:
                            self.wfile.write(body)
                        return
                    status, headers, body = route
                    self.send_response(status)
                    names = {k.lower() for k, _ in headers}
                    for k, v in headers:
                        self.send_header(k, v)
                    if "content-length" not in names:
                        self.send_header("Content-Length", str(len(body)))
                    self.end_headers()
                    if send_body and body:
                        self.wfile.write(body)
                except (BrokenPipeError, ConnectionResetError):
                    pass  # client gave up (e.g. timed out); nothing to do

            def do_GET(self):
                self._serve(send_body=True)

            def do_HEAD(self):
                self._serve(send_body=False)

            def do_POST(self):
                length = int(self.headers.get("Content-Length") or 0)
                if length:
                    self.rfile.read(length)
                self._serve(send_body=True)

        class Server(ThreadingHTTPServer):
            daemon_threads = True
            request_queue_size = 128

        self._httpd = Server(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True
        )
        self._thread.start()

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def add(self, path: str, body: bytes, content_type: str, status: int = 200,
            headers: list[tuple[str, str]] | None = None) -> str:
        hdrs = [("Content-Type", content_type)] + (headers or [])
        self.routes[path] = (status, hdrs, body)
        return self.url + path

    def close(self):
        self._httpd.shutdown()
        self._httpd.server_close()


# --- tiny fixture payloads ---------------------------------------------------

CHECKER_XBM = (
    "#define t_width 2\n"
    "#define t_height 2\n"
    "static char t_bits[] = {0x01, 0x02};\n"
)


def make_jpeg(width: int = 32, height: int = 24, color=(180, 40, 40)) -> bytes:
    buf = io.BytesIO()
    Image.new("RGB", (width, height), color).save(buf, format="JPEG")
    return buf.getvalue()


def make_gif(width: int = 16, height: int = 12, color=(0, 120, 0)) -> bytes:
    buf = io.BytesIO()
    Image.new("RGB", (width, height), color).save(buf, format="GIF")
    return buf.getvalue()


def make_jp2_stand_in() -> bytes:
    """Bytes carrying the JPEG 2000 signature box. The external conversion
    stub never decodes its input, so a header plus filler is enough."""
    return bytes.fromhex("0000000c6a5020200d0a870a") + b"\x00" * 64


# The published three-entry catalog document, kept verbatim as the
# compatibility reference for the document format.
REFERENCE_CATALOG_XML = """<transformations>
  <transform id="JPG->GIF" description="Transform JPG->GIF">
    <mimetypesource>image/jpeg</mimetypesource>
    <mimetypetarget>image/gif</mimetypetarget>
    <library>TRImageMagick</library>
  </transform>

  <transform id="XBM->PNG" description="Transform XBM->PNG">
    <mimetypesource>image/x-xbitmap</mimetypesource>
    <mimetypetarget>image/png</mimetypetarget>
    <library>TRImageMagick</library>
  </transform>

  <transform id="JP2->JPG" description="Trans JPEG-2000->JPG">
    <mimetypesource>image/jp2</mimetypesource>
    <mimetypetarget>image/jpeg</mimetypetarget>
    <library>TRImageMagick</library>
  </transform>
</transformations>
"""

# Two sibling profile roots with no enclosing element, exactly as the
# reference document prints them; the parser wraps them itself.
REFERENCE_PROFILES_XML = """<profile id="dswaney">
  <transform id="001" rule="JPG->GIF" />
  <transform id="002" rule="XBM->PNG" />
  <transform id="003" rule="GIF->BMP" />
</profile>
<profile id="mln">
  <transform id="001" rule="JP2->JPG" />
  <transform id="002" rule="GIF->PNG" />
</profile>
"""

CATALOG_XML = """<transformations>
  <transform id="JPG->GIF" description="Transform JPG->GIF">
    <mimetypesource>image/jpeg</mimetypesource>
    <mimetypetarget>image/gif</mimetypetarget>
    <library>TRImageMagick</library>
  </transform>
  <transform id="XBM->PNG" description="Transform XBM->PNG">
    <mimetypesource>image/x-xbitmap</mimetypesource>
    <mimetypetarget>image/png</mimetypetarget>
    <library>TRImageMagick</library>
  </transform>
  <transform id="JP2->JPG" description="Trans JPEG-2000->JPG">
    <mimetypesource>image/jp2</mimetypesource>
    <mimetypetarget>image/jpeg</mimetypetarget>
    <library>TRExternal</library>
  </transform>
  <transform id="GIF->BMP" description="Transform GIF->BMP">
    <mimetypesource>image/gif</mimetypesource>
    <mimetypetarget>image/bmp</mimetypetarget>
    <library>TRImageMagick</library>
  </transform>
  <transform id="GIF->PNG" description="Transform GIF->PNG">
    <mimetypesource>image/gif</mimetypesource>
    <mimetypetarget>image/png</mimetypetarget>
    <library>TRImageMagick</library>
  </transform>
  <transform id="PNG->BMP" description="Transform PNG->BMP">
    <mimetypesource>image/png</mimetypesource>
    <mimetypetarget>image/bmp</mimetypetarget>
    <library>TRImageMagick</library>
  </transform>
  <transform id="PNG->GIF" description="Transform PNG->GIF">
    <mimetypesource>image/png</mimetypesource>
    <mimetypetarget>image/gif</mimetypetarget>
    <library>TRImageMagick</library>
  </transform>
</transformations>
"""

PROFILES_XML = """<profiles>
  <profile id="dswaney">
    <transform id="001" rule="JPG->GIF" />
    <transform id="002" rule="XBM->PNG" />
    <transform id="003" rule="GIF->BMP" />
  </profile>
  <profile id="mln">
    <transform id="001" rule="JP2->JPG" />
    <transform id="002" rule="GIF->PNG" />
  </profile>
  <profile id="xbm-only">
    <transform id="001" rule="XBM->PNG" />
  </profile>
  <profile id="png-bmp">
    <transform id="001" rule="PNG->BMP" />
  </profile>
  <profile id="looper">
    <transform id="001" rule="GIF->PNG" />
    <transform id="002" rule="PNG->GIF" />
  </profile>
  <profile id="empty" />
</profiles>
"""
