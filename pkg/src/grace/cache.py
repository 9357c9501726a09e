"""Content-addressed cache of transformed bodies.

Keyed on the canonicalized request URL, a digest of the original
(pre-transformation) body, and the chain-plus-options signature, so a
changed origin or a changed configuration can never serve stale bytes.

Storage is two-level: an in-memory LRU index over a directory of entries,
one <digest>.bin body plus a <digest>.meta JSON sidecar each. Writes go
to a temp file and are renamed into place, so a reader never sees a
partial entry. The index is rebuilt from the sidecars on startup.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import urlsplit, urlunsplit

logger = logging.getLogger(__name__)

DEFAULT_CAPACITY = 256 * 1024 * 1024
DEFAULT_ENTRY_CAP = 32 * 1024 * 1024


def canonical_url(url: str) -> str:
    """Lowercase scheme and host, drop default ports and fragments, and
    give an empty path its canonical '/'."""
    parts = urlsplit(url)
    host = (parts.hostname or "").lower()
    port = parts.port
    if port is not None and not (parts.scheme == "http" and port == 80):
        host = f"{host}:{port}"
    return urlunsplit((parts.scheme.lower(), host, parts.path or "/", parts.query, ""))


def body_digest(body: bytes) -> str:
    return hashlib.sha256(body).hexdigest()


@dataclass(frozen=True)
class CacheKey:
    url: str
    body_digest: str
    chain_signature: str

    def digest(self) -> str:
        h = hashlib.sha256()
        for part in (self.url, self.body_digest, self.chain_signature):
            h.update(part.encode("utf-8"))
            h.update(b"\x00")
        return h.hexdigest()


def make_key(url: str, original_body: bytes, chain_ids, options_fingerprint: str) -> CacheKey:
    return CacheKey(
        url=canonical_url(url),
        body_digest=body_digest(original_body),
        chain_signature="|".join(chain_ids) + "|" + options_fingerprint,
    )


@dataclass(frozen=True)
class CacheEntry:
    key: CacheKey
    body: bytes
    final_mime: str
    stored_at: float

    @property
    def size(self) -> int:
        return len(self.body)


class DiskLRUCache:
    """LRU-evicting disk cache bounded by total stored body bytes."""

    def __init__(
        self,
        directory,
        capacity: int = DEFAULT_CAPACITY,
        entry_cap: int = DEFAULT_ENTRY_CAP,
    ):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.capacity = capacity
        self.entry_cap = entry_cap
        self._lock = threading.Lock()
        # digest -> (size, final_mime, stored_at); insertion order is recency
        self._index: OrderedDict[str, tuple[int, str, float]] = OrderedDict()
        self._total = 0
        self._load_index()

    # --- public API ---------------------------------------------------

    def get(self, key: CacheKey) -> CacheEntry | None:
        digest = key.digest()
        with self._lock:
            meta = self._index.get(digest)
            if meta is None:
                return None
            size, final_mime, stored_at = meta
            try:
                body = self._body_path(digest).read_bytes()
            except OSError as exc:
                logger.warning("cache entry %s unreadable (%s); evicting", digest, exc)
                self._drop(digest)
                return None
            if len(body) != size:
                logger.warning("cache entry %s size mismatch; evicting", digest)
                self._drop(digest)
                return None
            self._index.move_to_end(digest)
            return CacheEntry(key=key, body=body, final_mime=final_mime, stored_at=stored_at)

    def put(self, entry: CacheEntry):
        if entry.size > self.entry_cap or entry.size > self.capacity:
            logger.info(
                "not caching %d-byte entry (cap %d)", entry.size, self.entry_cap
            )
            return
        digest = entry.key.digest()
        with self._lock:
            self._write_entry(digest, entry)
            if digest in self._index:
                self._total -= self._index[digest][0]
                del self._index[digest]
            self._index[digest] = (entry.size, entry.final_mime, entry.stored_at)
            self._total += entry.size
            while self._total > self.capacity:
                victim, (vsize, _, _) = next(iter(self._index.items()))
                self._drop(victim)

    def total_bytes(self) -> int:
        with self._lock:
            return self._total

    def __len__(self):
        with self._lock:
            return len(self._index)

    # --- internals ------------------------------------------------------

    def _body_path(self, digest: str) -> Path:
        return self.directory / f"{digest}.bin"

    def _meta_path(self, digest: str) -> Path:
        return self.directory / f"{digest}.meta"

    def _write_entry(self, digest: str, entry: CacheEntry):
        tmp = self.directory / f".{digest}.tmp"
        tmp.write_bytes(entry.body)
        os.replace(tmp, self._body_path(digest))
        meta = {
            "final_mime": entry.final_mime,
            "stored_at": entry.stored_at,
            "size": entry.size,
        }
        tmp.write_text(json.dumps(meta), encoding="utf-8")
        os.replace(tmp, self._meta_path(digest))

    def _drop(self, digest: str):
        meta = self._index.pop(digest, None)
        if meta is not None:
            self._total -= meta[0]
        for path in (self._body_path(digest), self._meta_path(digest)):
            try:
                path.unlink(missing_ok=True)
            except OSError:
                pass

    def _load_index(self):
        found = []
        for meta_path in self.directory.glob("*.meta"):
            digest = meta_path.stem
            body_path = self._body_path(digest)
            try:
                meta = json.loads(meta_path.read_text(encoding="utf-8"))
                size = int(meta["size"])
                final_mime = str(meta["final_mime"])
                stored_at = float(meta["stored_at"])
            except (OSError, ValueError, KeyError, TypeError):
                logger.warning("discarding unreadable cache sidecar %s", meta_path)
                meta_path.unlink(missing_ok=True)
                body_path.unlink(missing_ok=True)
                continue
            if not body_path.exists() or body_path.stat().st_size != size:
                logger.warning("discarding corrupt cache entry %s", digest)
                meta_path.unlink(missing_ok=True)
                body_path.unlink(missing_ok=True)
                continue
            found.append((stored_at, digest, size, final_mime))
        for stored_at, digest, size, final_mime in sorted(found):
            self._index[digest] = (size, final_mime, stored_at)
            self._total += size
        # orphaned bodies without sidecars are unreachable; remove them
        for body_path in self.directory.glob("*.bin"):
            if body_path.stem not in self._index:
                body_path.unlink(missing_ok=True)
        while self._total > self.capacity and self._index:
            victim = next(iter(self._index))
            self._drop(victim)


def utcnow() -> float:
    return time.time()
