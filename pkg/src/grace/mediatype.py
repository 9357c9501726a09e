"""Media-type normalization and validation.

Rule matching throughout grace operates on normalized `type/subtype`
strings: lowercase, no parameters, no surrounding whitespace.
"""

from __future__ import annotations

import re

# RFC 7231 token characters on both sides of the slash.
_MEDIA_TYPE_RE = re.compile(r"^[a-z0-9!#$%&'*+.^_`|~-]+/[a-z0-9!#$%&'*+.^_`|~-]+$")

OCTET_STREAM = "application/octet-stream"


def normalize_media_type(value: str) -> str:
    """Lowercase a Content-Type value and strip any parameters.

    "IMAGE/JPEG; q=0.5" -> "image/jpeg". An empty or missing value
    normalizes to application/octet-stream.
    """
    if not value:
        return OCTET_STREAM
    base = value.split(";", 1)[0].strip().lower()
    return base or OCTET_STREAM


def is_valid_media_type(value: str) -> bool:
    """True if value is a bare, already-normalized type/subtype pair."""
    return bool(_MEDIA_TYPE_RE.match(value))
