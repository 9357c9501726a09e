"""Decoded-image interchange model plus the pixel operations the proxy
performs itself: alpha flattening onto a solid matte and the top-left
watermark stamp.

Every codec decodes into RasterImage and encodes from it, so converters
compose without knowing each other's byte formats.
"""

from __future__ import annotations

from dataclasses import dataclass, field

WHITE = (255, 255, 255)
BLACK = (0, 0, 0)


@dataclass(frozen=True)
class RasterImage:
    """Row-major RGBA8 pixel buffer. pixels holds width*height samples of
    4 bytes each."""

    width: int
    height: int
    pixels: bytes

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"degenerate image size {self.width}x{self.height}")
        if len(self.pixels) != self.width * self.height * 4:
            raise ValueError(
                f"pixel buffer holds {len(self.pixels)} bytes, expected "
                f"{self.width * self.height * 4} for {self.width}x{self.height} RGBA"
            )

    def pixel(self, x: int, y: int) -> tuple[int, int, int, int]:
        i = (y * self.width + x) * 4
        return tuple(self.pixels[i : i + 4])

    def is_opaque(self) -> bool:
        return all(self.pixels[i] == 255 for i in range(3, len(self.pixels), 4))


def solid(width: int, height: int, rgba: tuple[int, int, int, int]) -> RasterImage:
    return RasterImage(width, height, bytes(rgba) * (width * height))


@dataclass(frozen=True)
class ConvertOptions:
    """Knobs shared by every conversion: the matte used when a target
    format cannot carry alpha, and the transformed-by-us watermark."""

    matte_color: tuple[int, int, int] = WHITE
    watermark: bool = True
    watermark_text: str = "GRACE"

    def fingerprint(self) -> str:
        """Stable string folded into cache keys so option changes never
        serve stale conversions."""
        r, g, b = self.matte_color
        wm = f"on:{self.watermark_text}" if self.watermark else "off"
        return f"matte={r:02x}{g:02x}{b:02x};wm={wm}"


def flatten_alpha(img: RasterImage, matte: tuple[int, int, int] = WHITE) -> RasterImage:
    """Composite every pixel over the matte color: c' = round-half-up of
    c*(a/255) + matte*(1 - a/255). The result is fully opaque."""
    out = bytearray(img.pixels)
    for i in range(0, len(out), 4):
        a = out[i + 3]
        if a == 255:
            continue
        for c in range(3):
            v = out[i + c] * a + matte[c] * (255 - a)
            out[i + c] = (2 * v + 255) // 510
        out[i + 3] = 255
    return RasterImage(img.width, img.height, bytes(out))


# 5x7 monospaced glyphs, drawn as 7 rows of 5 cells. Rendering paints a
# 6x8 cell per character (one blank column and row of spacing), white
# background, black set-cells. Characters without a glyph render as a
# filled block so a bad watermark string stays visible rather than silent.
_GLYPHS_RAW = {
    "A": (".XXX.", "X...X", "X...X", "XXXXX", "X...X", "X...X", "X...X"),
    "B": ("XXXX.", "X...X", "X...X", "XXXX.", "X...X", "X...X", "XXXX."),
    "C": (".XXX.", "X...X", "X....", "X....", "X....", "X...X", ".XXX."),
    "D": ("XXXX.", "X...X", "X...X", "X...X", "X...X", "X...X", "XXXX."),
    "E": ("XXXXX", "X....", "X....", "XXXX.", "X....", "X....", "XXXXX"),
    "F": ("XXXXX", "X....", "X....", "XXXX.", "X....", "X....", "X...."),
    "G": (".XXX.", "X...X", "X....", "X.XXX", "X...X", "X...X", ".XXXX"),
    "H": ("X...X", "X...X", "X...X", "XXXXX", "X...X", "X...X", "X...X"),
    "I": (".XXX.", "..X..", "..X..", "..X..", "..X..", "..X..", ".XXX."),
    "J": ("..XXX", "...X.", "...X.", "...X.", "...X.", "X..X.", ".XX.."),
    "K": ("X...X", "X..X.", "X.X..", "XX...", "X.X..", "X..X.", "X...X"),
    "L": ("X....", "X....", "X....", "X....", "X....", "X....", "XXXXX"),
    "M": ("X...X", "XX.XX", "X.X.X", "X.X.X", "X...X", "X...X", "X...X"),
    "N": ("X...X", "XX..X", "X.X.X", "X..XX", "X...X", "X...X", "X...X"),
    "O": (".XXX.", "X...X", "X...X", "X...X", "X...X", "X...X", ".XXX."),
    "P": ("XXXX.", "X...X", "X...X", "XXXX.", "X....", "X....", "X...."),
    "Q": (".XXX.", "X...X", "X...X", "X...X", "X.X.X", "X..X.", ".XX.X"),
    "R": ("XXXX.", "X...X", "X...X", "XXXX.", "X.X..", "X..X.", "X...X"),
    "S": (".XXXX", "X....", "X....", ".XXX.", "....X", "....X", "XXXX."),
    "T": ("XXXXX", "..X..", "..X..", "..X..", "..X..", "..X..", "..X.."),
    "U": ("X...X", "X...X", "X...X", "X...X", "X...X", "X...X", ".XXX."),
    "V": ("X...X", "X...X", "X...X", "X...X", "X...X", ".X.X.", "..X.."),
    "W": ("X...X", "X...X", "X...X", "X.X.X", "X.X.X", "X.X.X", ".X.X."),
    "X": ("X...X", "X...X", ".X.X.", "..X..", ".X.X.", "X...X", "X...X"),
    "Y": ("X...X", "X...X", ".X.X.", "..X..", "..X..", "..X..", "..X.."),
    "Z": ("XXXXX", "....X", "...X.", "..X..", ".X...", "X....", "XXXXX"),
    "0": (".XXX.", "X...X", "X..XX", "X.X.X", "XX..X", "X...X", ".XXX."),
    "1": ("..X..", ".XX..", "..X..", "..X..", "..X..", "..X..", ".XXX."),
    "2": (".XXX.", "X...X", "....X", "...X.", "..X..", ".X...", "XXXXX"),
    "3": ("XXXXX", "...X.", "..X..", "...X.", "....X", "X...X", ".XXX."),
    "4": ("...X.", "..XX.", ".X.X.", "X..X.", "XXXXX", "...X.", "...X."),
    "5": ("XXXXX", "X....", "XXXX.", "....X", "....X", "X...X", ".XXX."),
    "6": ("..XX.", ".X...", "X....", "XXXX.", "X...X", "X...X", ".XXX."),
    "7": ("XXXXX", "....X", "...X.", "..X..", ".X...", ".X...", ".X..."),
    "8": (".XXX.", "X...X", "X...X", ".XXX.", "X...X", "X...X", ".XXX."),
    "9": (".XXX.", "X...X", "X...X", ".XXXX", "....X", "...X.", ".XX.."),
    " ": (".....", ".....", ".....", ".....", ".....", ".....", "....."),
    "-": (".....", ".....", ".....", ".XXX.", ".....", ".....", "....."),
    "+": (".....", "..X..", "..X..", "XXXXX", "..X..", "..X..", "....."),
    "=": (".....", ".....", "XXXXX", ".....", "XXXXX", ".....", "....."),
    ".": (".....", ".....", ".....", ".....", ".....", "..XX.", "..XX."),
    ",": (".....", ".....", ".....", ".....", "..XX.", "...X.", "..X.."),
    ":": (".....", "..XX.", "..XX.", ".....", "..XX.", "..XX.", "....."),
    "!": ("..X..", "..X..", "..X..", "..X..", "..X..", ".....", "..X.."),
    "?": (".XXX.", "X...X", "....X", "...X.", "..X..", ".....", "..X.."),
    "/": ("....X", "....X", "...X.", "..X..", ".X...", "X....", "X...."),
    "(": ("...X.", "..X..", ".X...", ".X...", ".X...", "..X..", "...X."),
    ")": (".X...", "..X..", "...X.", "...X.", "...X.", "..X..", ".X..."),
    ">": ("X....", ".X...", "..X..", "...X.", "..X..", ".X...", "X...."),
    "<": ("...X.", "..X..", ".X...", "X....", ".X...", "..X..", "...X."),
    "_": (".....", ".....", ".....", ".....", ".....", ".....", "XXXXX"),
    "'": ("..X..", "..X..", ".....", ".....", ".....", ".....", "....."),
    "*": (".....", "X.X.X", ".XXX.", "XXXXX", ".XXX.", "X.X.X", "....."),
}
_UNKNOWN = ("XXXXX",) * 7

GLYPH_WIDTH = 5
GLYPH_HEIGHT = 7
CELL_WIDTH = GLYPH_WIDTH + 1
CELL_HEIGHT = GLYPH_HEIGHT + 1


def _compile(rows: tuple[str, ...]) -> tuple[tuple[bool, ...], ...]:
    return tuple(tuple(c == "X" for c in row) for row in rows)


FONT_5X7: dict[str, tuple[tuple[bool, ...], ...]] = {
    ch: _compile(rows) for ch, rows in _GLYPHS_RAW.items()
}
_UNKNOWN_GLYPH = _compile(_UNKNOWN)


def glyph_for(ch: str) -> tuple[tuple[bool, ...], ...]:
    return FONT_5X7.get(ch.upper(), _UNKNOWN_GLYPH)


def apply_watermark(img: RasterImage, text: str) -> RasterImage:
    """Stamp text at the image origin in the built-in 5x7 font: each
    character paints an opaque white 6x8 cell with black glyph pixels.
    Cells extending past the image edge are clipped; empty text is the
    identity."""
    if not text:
        return img
    out = bytearray(img.pixels)

    def put(x: int, y: int, rgb: tuple[int, int, int]):
        if 0 <= x < img.width and 0 <= y < img.height:
            i = (y * img.width + x) * 4
            out[i : i + 4] = bytes((*rgb, 255))

    for n, ch in enumerate(text):
        glyph = glyph_for(ch)
        x0 = n * CELL_WIDTH
        if x0 >= img.width:
            break
        for dy in range(CELL_HEIGHT):
            for dx in range(CELL_WIDTH):
                put(x0 + dx, dy, WHITE)
        for dy, row in enumerate(glyph):
            for dx, on in enumerate(row):
                if on:
                    put(x0 + dx, dy, BLACK)
    return RasterImage(img.width, img.height, bytes(out))
