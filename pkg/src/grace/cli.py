"""Command-line entry point.

Flags mirror ProxyConfig; the GRACE_CONFIG environment variable may name
a JSON file supplying the same keys (underscored), with command-line
flags taking precedence over the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import threading
from pathlib import Path

from . import __version__
from .admin import AdminServer
from .app import GraceApp
from .config import (
    DEFAULT_ADMIN_LISTEN,
    DEFAULT_CACHE_CAPACITY,
    DEFAULT_LISTEN,
    DEFAULT_MAX_TRANSFORM_BYTES,
    ProxyConfig,
    parse_listen,
    parse_matte,
)
from .errors import GraceError
from .external import ExternalServiceConfig
from .proxy import ProxyServer
from .raster import ConvertOptions

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    # Every default is None so that "flag was given" is distinguishable
    # from "use the GRACE_CONFIG file value or the built-in default".
    p = argparse.ArgumentParser(
        prog="grace",
        description="Transforming HTTP proxy: rewrites responses per user profile.",
    )
    p.add_argument("--version", action="version", version=f"grace {__version__}")
    p.add_argument("--listen", metavar="HOST:PORT", help="proxy listen address (default 127.0.0.1:8118)")
    p.add_argument("--profiles", metavar="PATH", help="profiles XML document")
    p.add_argument("--transformations", metavar="PATH", help="transformation catalog XML document")
    p.add_argument("--default-profile", metavar="ID", help="profile for requests that identify none")
    p.add_argument(
        "--sniff",
        action="store_const",
        const=True,
        help="detect media types from magic bytes, overriding Content-Type",
    )
    p.add_argument(
        "--no-watermark",
        action="store_const",
        const=True,
        help="do not stamp transformed images",
    )
    p.add_argument("--watermark-text", metavar="TEXT", help="watermark text (default GRACE)")
    p.add_argument("--matte", metavar="RRGGBB", help="background color for flattened alpha (default ffffff)")
    p.add_argument("--cache-dir", metavar="PATH", help="transform cache directory (default: per-run temp dir)")
    p.add_argument("--cache-capacity", metavar="N", type=int, help="cache size bound in bytes (default 256 MiB)")
    p.add_argument(
        "--no-cache",
        action="store_const",
        const=True,
        help="disable the transform cache entirely",
    )
    p.add_argument("--max-transform-bytes", metavar="N", type=int, help="bodies larger than this pass through (default 64 MiB)")
    p.add_argument("--external-url", metavar="URL", help="base URL of the remote conversion service")
    p.add_argument("--admin-listen", metavar="HOST:PORT", help="management API address (default 127.0.0.1:8119)")
    p.add_argument("--ui-dir", metavar="PATH", help="static bundle served at /ui/ on the admin address")
    p.add_argument("--events-log", metavar="PATH", help="append transformation events to this file")
    p.add_argument("--log-level", metavar="L", help="debug|info|warning|error (default info)")
    return p


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: GRACE_CONFIG must contain a JSON object")
    return doc


def build_config(args: argparse.Namespace, config_file: str | None = None) -> ProxyConfig:
    file_values = _load_config_file(config_file)

    def pick(key: str, default=None):
        flag = getattr(args, key)
        if flag is not None:
            return flag
        value = file_values.get(key)
        return default if value is None else value

    profiles = pick("profiles")
    transformations = pick("transformations")
    if not profiles or not transformations:
        raise ValueError("--profiles and --transformations are required")

    listen = parse_listen(str(pick("listen", "%s:%d" % DEFAULT_LISTEN)))
    admin = parse_listen(str(pick("admin_listen", "%s:%d" % DEFAULT_ADMIN_LISTEN)))
    matte = parse_matte(str(pick("matte", "ffffff")))
    external_url = pick("external_url")
    external = None
    if external_url:
        external = ExternalServiceConfig(
            base_url=str(external_url),
            timeout_ms=int(file_values.get("external_timeout_ms", 10_000)),
        )
    cache_dir = pick("cache_dir")
    events_log = pick("events_log")
    ui_dir = pick("ui_dir")
    return ProxyConfig(
        profiles_path=Path(profiles),
        transformations_path=Path(transformations),
        listen_host=listen[0],
        listen_port=listen[1],
        admin_host=admin[0],
        admin_port=admin[1],
        default_profile=pick("default_profile"),
        max_transform_bytes=int(pick("max_transform_bytes", DEFAULT_MAX_TRANSFORM_BYTES)),
        sniff=bool(pick("sniff", False)),
        options=ConvertOptions(
            matte_color=matte,
            watermark=not pick("no_watermark", False),
            watermark_text=str(pick("watermark_text", "GRACE")),
        ),
        cache_dir=Path(cache_dir) if cache_dir else None,
        cache_capacity=int(pick("cache_capacity", DEFAULT_CACHE_CAPACITY)),
        no_cache=bool(pick("no_cache", False)),
        external=external,
        events_path=Path(events_log) if events_log else None,
        ui_dir=Path(ui_dir) if ui_dir else None,
    )


def _log_level(args: argparse.Namespace, file_values: dict) -> int:
    name = args.log_level or file_values.get("log_level") or "info"
    level = getattr(logging, str(name).upper(), None)
    if not isinstance(level, int):
        raise ValueError(f"unknown log level {name!r}")
    return level


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config_file = os.environ.get("GRACE_CONFIG")
    try:
        file_values = _load_config_file(config_file)
        logging.basicConfig(
            level=_log_level(args, file_values),
            format="%(asctime)s %(levelname)s %(name)s %(message)s",
        )
        cfg = build_config(args, config_file)
        app = GraceApp(cfg)
    except (GraceError, OSError, ValueError) as exc:
        parser.error(str(exc))

    try:
        proxy = ProxyServer(app).start()
        admin = AdminServer(app).start()
    except GraceError as exc:
        parser.error(str(exc))
    logger.info("proxy listening on %s", proxy.url)
    logger.info("admin API on %s", admin.url)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        logger.info("shutting down")
    finally:
        proxy.stop()
        admin.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
