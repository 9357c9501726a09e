"""XBM (X BitMap) decoder.

XBM is a C-source text format: two #define lines give the dimensions and
a brace-wrapped byte array carries the bits, least-significant-bit first
within each byte, rows padded up to a whole byte. A set bit is an opaque
black pixel, a clear bit opaque white.
"""

from __future__ import annotations

import re

from ..errors import DecodeError
from ..raster import RasterImage

_WIDTH_RE = re.compile(rb"#define\s+\S*?width\s+(\d+)")
_HEIGHT_RE = re.compile(rb"#define\s+\S*?height\s+(\d+)")
_VALUE_RE = re.compile(rb"(0[xX][0-9a-fA-F]+|\d+)")

BLACK_PIXEL = bytes((0, 0, 0, 255))
WHITE_PIXEL = bytes((255, 255, 255, 255))


def decode(data: bytes) -> RasterImage:
    wm = _WIDTH_RE.search(data)
    if not wm:
        raise DecodeError("no width #define found", offset=0)
    hm = _HEIGHT_RE.search(data)
    if not hm:
        raise DecodeError("no height #define found", offset=wm.end())
    width = int(wm.group(1))
    height = int(hm.group(1))
    if width < 1 or height < 1:
        raise DecodeError(f"degenerate dimensions {width}x{height}", offset=wm.start())

    open_brace = data.find(b"{", hm.end())
    if open_brace < 0:
        raise DecodeError("no bits array found", offset=hm.end())
    close_brace = data.find(b"}", open_brace)
    if close_brace < 0:
        raise DecodeError("bits array is not closed", offset=len(data))

    bytes_per_row = (width + 7) // 8
    needed = bytes_per_row * height
    values = []
    for m in _VALUE_RE.finditer(data, open_brace + 1, close_brace):
        values.append(int(m.group(1), 0) & 0xFF)
        if len(values) == needed:
            break
    if len(values) < needed:
        raise DecodeError(
            f"bits array holds {len(values)} bytes, need {needed}",
            offset=close_brace,
        )

    out = bytearray()
    for y in range(height):
        row = values[y * bytes_per_row : (y + 1) * bytes_per_row]
        for x in range(width):
            bit = (row[x // 8] >> (x % 8)) & 1
            out += BLACK_PIXEL if bit else WHITE_PIXEL
    return RasterImage(width, height, bytes(out))
