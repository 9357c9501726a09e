"""Pillow-backed raster decoding and encoding.

Pillow carries the heavy formats (PNG, GIF, JPEG, BMP decode); the module
pins the output parameters the proxy promises: PNG as 8-bit RGBA
non-interlaced, GIF89a with median-cut quantization and no dithering,
baseline JPEG at quality 90 with 4:2:0 subsampling.
"""

from __future__ import annotations

import io

from PIL import Image, UnidentifiedImageError

from ..errors import DecodeError, EncodeError, PreconditionError
from ..raster import RasterImage

_PIL_FORMAT = {
    "image/png": "PNG",
    "image/gif": "GIF",
    "image/jpeg": "JPEG",
    "image/bmp": "BMP",
}

JPEG_QUALITY = 90
JPEG_SUBSAMPLING = 2  # 4:2:0


def decode(data: bytes, mime: str) -> RasterImage:
    fmt = _PIL_FORMAT[mime]
    try:
        with Image.open(io.BytesIO(data), formats=[fmt]) as im:
            im.load()  # force full decode so truncation surfaces here
            rgba = im.convert("RGBA")
            return RasterImage(rgba.width, rgba.height, rgba.tobytes())
    except UnidentifiedImageError as exc:
        raise DecodeError(f"payload is not valid {fmt}: {exc}") from exc
    except (OSError, ValueError, SyntaxError) as exc:
        raise DecodeError(f"corrupt {fmt} payload: {exc}") from exc


def _to_pil(img: RasterImage) -> Image.Image:
    return Image.frombytes("RGBA", (img.width, img.height), img.pixels)


def _require_opaque(img: RasterImage, fmt: str):
    if not img.is_opaque():
        raise PreconditionError(
            f"{fmt} cannot carry alpha; flatten the image onto a matte first"
        )


def encode_png(img: RasterImage) -> bytes:
    buf = io.BytesIO()
    try:
        _to_pil(img).save(buf, "PNG")
    except (OSError, ValueError) as exc:
        raise EncodeError(f"PNG encode failed: {exc}") from exc
    return buf.getvalue()


def encode_gif(img: RasterImage) -> bytes:
    _require_opaque(img, "GIF")
    buf = io.BytesIO()
    try:
        rgb = _to_pil(img).convert("RGB")
        pal = rgb.quantize(
            colors=256, method=Image.Quantize.MEDIANCUT, dither=Image.Dither.NONE
        )
        pal.save(buf, "GIF", optimize=False)
    except (OSError, ValueError) as exc:
        raise EncodeError(f"GIF encode failed: {exc}") from exc
    out = bytearray(buf.getvalue())
    out[:6] = b"GIF89a"  # Pillow stamps 87a for plain frames; the output contract is 89a
    return bytes(out)


def encode_jpeg(img: RasterImage) -> bytes:
    _require_opaque(img, "JPEG")
    buf = io.BytesIO()
    try:
        _to_pil(img).convert("RGB").save(
            buf, "JPEG", quality=JPEG_QUALITY, subsampling=JPEG_SUBSAMPLING
        )
    except (OSError, ValueError) as exc:
        raise EncodeError(f"JPEG encode failed: {exc}") from exc
    return buf.getvalue()
