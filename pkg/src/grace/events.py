"""Transformation audit records.

Every proxied GET that reached the planner produces one TransformEvent.
Events are kept in a bounded in-memory ring for the admin feed and
appended as newline-delimited key=value records to an optional log file
(URL percent-encoded so the line stays splittable on spaces).
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from urllib.parse import quote

OUTCOME_SUCCESS = "success"
OUTCOME_PASSTHROUGH = "passthrough"

# passthrough reasons
NO_RULE = "no-rule"
CYCLE = "cycle"
DEPTH_EXCEEDED = "depth-exceeded"
STEP_ERROR = "step-error"
OVERSIZE = "oversize"
CONTENT_ENCODING = "content-encoding"

MEMORY_RING_SIZE = 10000


@dataclass(frozen=True)
class TransformEvent:
    timestamp: float
    request_url: str
    profile_id: str
    chain_ids: tuple[str, ...]
    initial_mime: str
    final_mime: str
    input_bytes: int
    output_bytes: int
    duration_ms: int
    cache_hit: bool
    outcome: str
    reason: str = ""

    def __post_init__(self):
        if self.outcome == OUTCOME_PASSTHROUGH and self.reason == NO_RULE:
            assert not self.chain_ids, "no-rule passthrough must carry no chain ids"
        else:
            assert self.chain_ids, "every other outcome records the chain it attempted"

    def to_line(self) -> str:
        ts = datetime.fromtimestamp(self.timestamp, tz=timezone.utc).isoformat()
        fields = [
            f"ts={ts}",
            f"url={quote(self.request_url, safe=':/?&=%~.-_')}",
            f"profile={self.profile_id or '-'}",
            f"chain={','.join(self.chain_ids) or '-'}",
            f"initial={self.initial_mime}",
            f"final={self.final_mime}",
            f"in={self.input_bytes}",
            f"out={self.output_bytes}",
            f"ms={self.duration_ms}",
            f"cache={'hit' if self.cache_hit else 'miss'}",
            f"outcome={self.outcome}",
        ]
        if self.reason:
            fields.append(f"reason={self.reason}")
        return " ".join(fields)

    def to_json(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "url": self.request_url,
            "profile_id": self.profile_id,
            "chain_ids": list(self.chain_ids),
            "initial_mime": self.initial_mime,
            "final_mime": self.final_mime,
            "input_bytes": self.input_bytes,
            "output_bytes": self.output_bytes,
            "duration_ms": self.duration_ms,
            "cache_hit": self.cache_hit,
            "outcome": self.outcome,
            "reason": self.reason,
        }


class EventLog:
    """Thread-safe append-only event sink with a bounded query window."""

    def __init__(self, path=None, ring_size: int = MEMORY_RING_SIZE):
        self._lock = threading.Lock()
        self._ring: deque[TransformEvent] = deque(maxlen=ring_size)
        self._path = path
        self._seq = 0  # breaks timestamp ties so bursts keep insertion order

    def append(self, event: TransformEvent):
        with self._lock:
            self._seq += 1
            self._ring.append(event)
            if self._path is not None:
                with open(self._path, "a", encoding="utf-8") as fh:
                    fh.write(event.to_line() + "\n")

    def list(self, limit: int, since: float | None = None) -> list[TransformEvent]:
        """Most recent events, newest first. since filters to events with
        a strictly greater timestamp."""
        if not 1 <= limit <= 1000:
            raise ValueError("limit must be in [1, 1000]")
        with self._lock:
            snapshot = list(self._ring)
        if since is not None:
            snapshot = [e for e in snapshot if e.timestamp > since]
        return list(reversed(snapshot))[:limit]

    def __len__(self):
        with self._lock:
            return len(self._ring)


def now() -> float:
    return time.time()
