"""Native codecs, verified against independent reference readers so the
production code is never checked against itself."""

from __future__ import annotations

import io
import struct

import pytest
from PIL import Image

from grace.codecs import ALPHA_CAPABLE, DECODABLE, ENCODABLE, convert, decode, encode
from grace.errors import (
    DecodeError,
    PreconditionError,
    UnsupportedFormatError,
)
from grace.raster import ConvertOptions, RasterImage, solid

from refimage import (
    decode_xbm_reference,
    flatten_reference,
    read_bmp24,
    read_png,
    write_png,
)
from support import CHECKER_XBM

BLACK = (0, 0, 0, 255)
WHITE = (255, 255, 255, 255)


def checker_2x2() -> RasterImage:
    return RasterImage(
        2, 2, bytes(BLACK) + bytes(WHITE) + bytes(WHITE) + bytes(BLACK)
    )


class TestXbmDecode:
    def test_two_by_two_checker(self):
        img = decode(CHECKER_XBM.encode(), "image/x-xbitmap")
        assert (img.width, img.height) == (2, 2)
        assert img.pixel(0, 0) == BLACK
        assert img.pixel(1, 0) == WHITE
        assert img.pixel(0, 1) == WHITE
        assert img.pixel(1, 1) == BLACK

    def test_agrees_with_reference_bit_walk(self):
        # 10 wide forces two bytes per row with 6 pad bits
        text = (
            "#define w_width 10\n#define w_height 3\n"
            "static unsigned char w_bits[] = {\n"
            "  0xAB, 0x02, 0xFF, 0x03, 0x00, 0x01 };\n"
        )
        img = decode(text.encode(), "image/x-xbitmap")
        width, height, bits = decode_xbm_reference(text)
        assert (img.width, img.height) == (width, height)
        for y in range(height):
            for x in range(width):
                expected = BLACK if bits[y * width + x] else WHITE
                assert img.pixel(x, y) == expected

    def test_black_pixel_count_equals_popcount_of_used_bits(self):
        text = (
            "#define p_width 9\n#define p_height 2\n"
            "static char p_bits[] = {0xFF, 0x01, 0x10, 0x00};\n"
        )
        img = decode(text.encode(), "image/x-xbitmap")
        black = sum(
            1
            for y in range(img.height)
            for x in range(img.width)
            if img.pixel(x, y) == BLACK
        )
        # row 0: 0xFF contributes 8, 0x01 bit0 is within width 9 -> 1
        # row 1: 0x10 contributes 1, second byte contributes 0
        assert black == 10

    def test_hex_decimal_and_char_declarations_accepted(self):
        text = (
            "#define d_width 2\n#define d_height 1\n"
            "static unsigned char d_bits[] = { 3 };\n"
        )
        img = decode(text.encode(), "image/x-xbitmap")
        assert img.pixel(0, 0) == BLACK
        assert img.pixel(1, 0) == BLACK

    def test_truncated_value_list_raises_decode_error(self):
        text = "#define t_width 2\n#define t_height 2\nstatic char t_bits[] = {0x01};"
        with pytest.raises(DecodeError):
            decode(text.encode(), "image/x-xbitmap")

    def test_missing_dimensions_raise_decode_error(self):
        with pytest.raises(DecodeError):
            decode(b"static char t_bits[] = {0x01};", "image/x-xbitmap")

    def test_empty_input_raises_decode_error(self):
        for mime in DECODABLE:
            with pytest.raises(DecodeError):
                decode(b"", mime)


class TestPngCodec:
    def test_encode_readable_by_reference_reader(self):
        img = RasterImage(
            2, 2,
            bytes((255, 0, 0, 255)) + bytes((0, 255, 0, 128))
            + bytes((0, 0, 255, 0)) + bytes((9, 8, 7, 200)),
        )
        data = encode(img, "image/png")
        width, height, rgba = read_png(data)
        assert (width, height) == (2, 2)
        assert rgba == img.pixels

    def test_reference_written_png_decodes_exactly(self):
        pixels = bytes((255, 0, 0, 255))
        data = write_png(1, 1, pixels)
        img = decode(data, "image/png")
        assert (img.width, img.height) == (1, 1)
        assert img.pixels == pixels

    def test_round_trip_is_pixel_exact(self):
        img = solid(7, 3, (12, 200, 31, 77))
        assert decode(encode(img, "image/png"), "image/png").pixels == img.pixels

    def test_corrupt_png_raises_decode_error(self):
        data = bytearray(write_png(2, 2, bytes(16)))
        data[12:16] = b"XXXX"  # clobber the header chunk tag
        with pytest.raises(DecodeError):
            decode(bytes(data), "image/png")


class TestBmpEncode:
    def test_two_by_two_is_exactly_70_bytes(self):
        data = encode(checker_2x2(), "image/bmp")
        # 14-byte file header + 40-byte info header + 2 rows of 8 bytes
        # (6 pixel bytes padded to the next 4-byte multiple)
        assert len(data) == 70

    def test_header_fields_by_hand(self):
        data = encode(checker_2x2(), "image/bmp")
        assert data[:2] == b"BM"
        file_size, _, offset = struct.unpack("<III", data[2:14])
        assert file_size == 70
        assert offset == 54
        header_size, width, height, planes, bpp, compression = struct.unpack(
            "<IiiHHI", data[14:34]
        )
        assert header_size == 40
        assert (width, height) == (2, 2)
        assert planes == 1
        assert bpp == 24
        assert compression == 0

    def test_pixels_bottom_up_bgr(self):
        data = encode(checker_2x2(), "image/bmp")
        width, height, rgba = read_bmp24(data)
        assert (width, height) == (2, 2)
        assert rgba == checker_2x2().pixels

    def test_pillow_agrees_with_reference_reader(self):
        img = solid(3, 2, (10, 20, 30, 255))
        data = encode(img, "image/bmp")
        ours = read_bmp24(data)[2]
        with Image.open(io.BytesIO(data)) as im:
            theirs = im.convert("RGBA").tobytes()
        assert ours == theirs == img.pixels

    def test_any_translucency_raises_precondition_error(self):
        with pytest.raises(PreconditionError):
            encode(solid(1, 1, (1, 2, 3, 128)), "image/bmp")

    def test_row_padding_for_odd_width(self):
        img = solid(3, 3, (100, 100, 100, 255))
        data = encode(img, "image/bmp")
        # 3 pixels = 9 bytes padded to 12 per row
        assert len(data) == 54 + 3 * 12
        assert read_bmp24(data)[2] == img.pixels


class TestGifCodec:
    def test_encode_writes_gif89a_magic(self):
        data = encode(solid(4, 4, (20, 30, 40, 255)), "image/gif")
        assert data[:6] == b"GIF89a"

    def test_round_trip_small_palette_exact(self):
        img = checker_2x2()
        out = decode(encode(img, "image/gif"), "image/gif")
        assert out.pixels == img.pixels

    def test_alpha_input_rejected(self):
        with pytest.raises(PreconditionError):
            encode(solid(2, 2, (1, 2, 3, 7)), "image/gif")

    def test_decode_pillow_generated_gif(self):
        buf = io.BytesIO()
        Image.new("RGB", (5, 4), (200, 10, 10)).save(buf, format="GIF")
        img = decode(buf.getvalue(), "image/gif")
        assert (img.width, img.height) == (5, 4)
        assert img.pixel(0, 0) == (200, 10, 10, 255)

    def test_palette_never_exceeds_256_colors(self):
        # a 32x32 gradient has 1024 distinct RGB values before quantizing
        pixels = bytearray()
        for y in range(32):
            for x in range(32):
                pixels += bytes((x * 8, y * 8, (x + y) * 4, 255))
        img = RasterImage(32, 32, bytes(pixels))
        out = decode(encode(img, "image/gif"), "image/gif")
        colors = {
            out.pixel(x, y) for y in range(out.height) for x in range(out.width)
        }
        assert len(colors) <= 256


class TestJpegCodec:
    def test_encode_writes_jfif_soi(self):
        data = encode(solid(8, 8, (128, 64, 32, 255)), "image/jpeg")
        assert data[:2] == b"\xff\xd8"

    def test_solid_color_survives_lossy_round_trip(self):
        img = solid(16, 16, (200, 120, 60, 255))
        out = decode(encode(img, "image/jpeg"), "image/jpeg")
        for x, y in ((0, 0), (8, 8), (15, 15)):
            for got, want in zip(out.pixel(x, y), img.pixel(x, y)):
                assert abs(got - want) <= 3

    def test_alpha_input_rejected(self):
        with pytest.raises(PreconditionError):
            encode(solid(2, 2, (1, 2, 3, 0)), "image/jpeg")

    def test_deterministic_bytes(self):
        img = solid(9, 9, (13, 57, 99, 255))
        assert encode(img, "image/jpeg") == encode(img, "image/jpeg")


class TestDispatch:
    def test_unsupported_decode_mime(self):
        with pytest.raises(UnsupportedFormatError):
            decode(b"xx", "image/tiff")

    def test_unsupported_encode_mime(self):
        with pytest.raises(UnsupportedFormatError):
            encode(solid(1, 1, (0, 0, 0, 255)), "image/webp")

    def test_encodable_formats_advertised(self):
        assert set(ALPHA_CAPABLE) <= set(ENCODABLE)


class TestConvert:
    def test_xbm_to_png_checker_without_watermark(self):
        opts = ConvertOptions(watermark=False)
        data = convert(CHECKER_XBM.encode(), "image/x-xbitmap", "image/png", opts)
        width, height, rgba = read_png(data)
        assert (width, height) == (2, 2)
        assert rgba == checker_2x2().pixels

    def test_png_identity_preserves_pixels(self):
        img = solid(6, 5, (4, 5, 6, 210))
        opts = ConvertOptions(watermark=False)
        data = convert(encode(img, "image/png"), "image/png", "image/png", opts)
        assert read_png(data)[2] == img.pixels

    def test_png_alpha_to_bmp_flattens_per_reference(self):
        pixels = (
            bytes((255, 0, 0, 0))
            + bytes((255, 0, 0, 128))
            + bytes((255, 0, 0, 255))
            + bytes((0, 0, 255, 64))
        )
        img = RasterImage(2, 2, pixels)
        opts = ConvertOptions(watermark=False, matte_color=(255, 255, 255))
        data = convert(write_png(2, 2, pixels), "image/png", "image/bmp", opts)
        got = read_bmp24(data)[2]
        want = flatten_reference(img.pixels, (255, 255, 255))
        for g, w in zip(got, want):
            assert abs(g - w) <= 1

    def test_watermark_on_changes_top_left_only(self):
        img = solid(40, 40, (120, 120, 120, 255))
        src = encode(img, "image/png")
        stamped = convert(src, "image/png", "image/png", ConvertOptions())
        rgba = read_png(stamped)[2]
        out = RasterImage(40, 40, rgba)
        assert out.pixel(39, 39) == (120, 120, 120, 255)
        assert any(
            out.pixel(x, y) != (120, 120, 120, 255)
            for y in range(8)
            for x in range(36)
        )

    def test_byte_deterministic_with_watermark_off(self):
        opts = ConvertOptions(watermark=False)
        a = convert(CHECKER_XBM.encode(), "image/x-xbitmap", "image/png", opts)
        b = convert(CHECKER_XBM.encode(), "image/x-xbitmap", "image/png", opts)
        assert a == b
