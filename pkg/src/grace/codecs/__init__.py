"""Native image codecs behind a single decode/encode/convert surface.

decode() turns supported byte formats into the RGBA interchange model,
encode() writes it back out, and convert() composes the full per-step
treatment: decode, optional watermark, alpha flattening when the target
format cannot carry alpha, encode.
"""

from __future__ import annotations

from ..errors import DecodeError, UnsupportedFormatError
from ..mediatype import normalize_media_type
from ..raster import ConvertOptions, RasterImage, apply_watermark, flatten_alpha
from . import bmp, pillow_io, xbm

DECODABLE = (
    "image/x-xbitmap",
    "image/png",
    "image/bmp",
    "image/gif",
    "image/jpeg",
)
ENCODABLE = (
    "image/png",
    "image/bmp",
    "image/gif",
    "image/jpeg",
)

# Only PNG output keeps an alpha channel; every other target is matted.
ALPHA_CAPABLE = frozenset({"image/png"})


def decode(data: bytes, mime: str) -> RasterImage:
    mime = normalize_media_type(mime)
    if mime not in DECODABLE:
        raise UnsupportedFormatError(f"no decoder for {mime!r}")
    if not data:
        raise DecodeError("empty payload", offset=0)
    if mime == "image/x-xbitmap":
        return xbm.decode(data)
    return pillow_io.decode(data, mime)


def encode(img: RasterImage, mime: str, opts: ConvertOptions | None = None) -> bytes:
    mime = normalize_media_type(mime)
    if mime == "image/png":
        return pillow_io.encode_png(img)
    if mime == "image/bmp":
        return bmp.encode(img)
    if mime == "image/gif":
        return pillow_io.encode_gif(img)
    if mime == "image/jpeg":
        return pillow_io.encode_jpeg(img)
    raise UnsupportedFormatError(f"no encoder for {mime!r}")


def convert(data: bytes, src: str, dst: str, opts: ConvertOptions) -> bytes:
    img = decode(data, src)
    if opts.watermark:
        img = apply_watermark(img, opts.watermark_text)
    if normalize_media_type(dst) not in ALPHA_CAPABLE:
        img = flatten_alpha(img, opts.matte_color)
    return encode(img, dst, opts)
