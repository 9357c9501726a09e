"""BMP encoder: 24-bit BITMAPINFOHEADER, bottom-up rows padded to 4-byte
multiples. BMP carries no alpha channel, so input must be flattened first.
"""

from __future__ import annotations

import struct

from ..errors import PreconditionError
from ..raster import RasterImage

FILE_HEADER_SIZE = 14
INFO_HEADER_SIZE = 40
PIXELS_PER_METER_96DPI = 2835


def encode(img: RasterImage) -> bytes:
    if not img.is_opaque():
        raise PreconditionError(
            "BMP cannot carry alpha; flatten the image onto a matte first"
        )
    row_size = (img.width * 3 + 3) & ~3
    data_size = row_size * img.height
    offset = FILE_HEADER_SIZE + INFO_HEADER_SIZE
    out = bytearray()
    out += struct.pack("<2sIHHI", b"BM", offset + data_size, 0, 0, offset)
    out += struct.pack(
        "<IiiHHIIiiII",
        INFO_HEADER_SIZE,
        img.width,
        img.height,  # positive height: bottom-up rows
        1,
        24,
        0,  # BI_RGB, uncompressed
        data_size,
        PIXELS_PER_METER_96DPI,
        PIXELS_PER_METER_96DPI,
        0,
        0,
    )
    pad = bytes(row_size - img.width * 3)
    for y in range(img.height - 1, -1, -1):
        base = y * img.width * 4
        row = bytearray()
        for x in range(img.width):
            i = base + x * 4
            row += bytes((img.pixels[i + 2], img.pixels[i + 1], img.pixels[i]))
        out += row + pad
    return bytes(out)
