"""Runtime configuration for the proxy and its admin surface."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .external import ExternalServiceConfig
from .raster import ConvertOptions
from .rules import DEFAULT_MAX_DEPTH

DEFAULT_LISTEN = ("127.0.0.1", 8118)
DEFAULT_ADMIN_LISTEN = ("127.0.0.1", 8119)
DEFAULT_MAX_TRANSFORM_BYTES = 64 * 1024 * 1024
DEFAULT_UPSTREAM_TIMEOUT_MS = 30_000
DEFAULT_CACHE_CAPACITY = 256 * 1024 * 1024


@dataclass
class ProxyConfig:
    profiles_path: Path
    transformations_path: Path
    listen_host: str = DEFAULT_LISTEN[0]
    listen_port: int = DEFAULT_LISTEN[1]
    admin_host: str = DEFAULT_ADMIN_LISTEN[0]
    admin_port: int = DEFAULT_ADMIN_LISTEN[1]
    default_profile: str | None = None
    max_transform_bytes: int = DEFAULT_MAX_TRANSFORM_BYTES
    sniff: bool = False
    upstream_timeout_ms: int = DEFAULT_UPSTREAM_TIMEOUT_MS
    max_depth: int = DEFAULT_MAX_DEPTH
    options: ConvertOptions = field(default_factory=ConvertOptions)
    cache_dir: Path | None = None  # None with caching on -> a per-run temp dir
    cache_capacity: int = DEFAULT_CACHE_CAPACITY
    no_cache: bool = False
    external: ExternalServiceConfig | None = None
    events_path: Path | None = None
    ui_dir: Path | None = None

    def __post_init__(self):
        self.profiles_path = Path(self.profiles_path)
        self.transformations_path = Path(self.transformations_path)
        for path in (self.profiles_path, self.transformations_path):
            if not path.is_file():
                raise FileNotFoundError(f"configuration file not readable: {path}")


def parse_listen(value: str) -> tuple[str, int]:
    host, _, port = value.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"expected HOST:PORT, got {value!r}")
    return host, int(port)


def parse_matte(value: str) -> tuple[int, int, int]:
    v = value.lstrip("#")
    if len(v) != 6:
        raise ValueError(f"expected RRGGBB hex color, got {value!r}")
    n = int(v, 16)
    return ((n >> 16) & 0xFF, (n >> 8) & 0xFF, n & 0xFF)
