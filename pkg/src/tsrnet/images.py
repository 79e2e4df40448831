"""Binary PPM (P6) and PNG decoding, plus bilinear resize and normalization."""
from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


class ImageDecodeError(ValueError):
    pass


class UnsupportedFormatError(ImageDecodeError):
    pass


class TruncatedImageError(ImageDecodeError):
    pass


class InvalidMaxvalError(ImageDecodeError):
    pass


def decode_image(path) -> np.ndarray:
    """Decode a P6 PPM or 8-bit RGB/RGBA PNG into a uint8 array [H, W, 3]."""
    data = Path(path).read_bytes()
    if data.startswith(b"P6"):
        return decode_ppm(data)
    if data.startswith(PNG_SIGNATURE):
        return decode_png(data)
    raise UnsupportedFormatError(f"{path}: unsupported image format (expected P6 PPM or PNG)")


# -- PPM ------------------------------------------------------------------------

def _ppm_header(data: bytes) -> tuple[list[int], int]:
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        if pos >= len(data):
            raise TruncatedImageError("truncated PPM header")
        ch = data[pos:pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            end = data.find(b"\n", pos)
            if end < 0:
                raise TruncatedImageError("truncated PPM header")
            pos = end + 1
        else:
            start = pos
            while pos < len(data) and data[pos:pos + 1].isdigit():
                pos += 1
            if start == pos:
                raise ImageDecodeError(f"malformed PPM header at byte {pos}")
            fields.append(int(data[start:pos]))
    # exactly one whitespace byte separates maxval from the raster
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise TruncatedImageError("truncated PPM header")
    return fields, pos + 1


def decode_ppm(data: bytes) -> np.ndarray:
    if not data.startswith(b"P6"):
        raise UnsupportedFormatError("only binary P6 PPM is supported")
    (width, height, maxval), offset = _ppm_header(data)
    if maxval != 255:
        raise InvalidMaxvalError(f"PPM maxval {maxval} unsupported (only 255)")
    if width < 1 or height < 1:
        raise ImageDecodeError(f"invalid PPM size {width}x{height}")
    need = width * height * 3
    raster = data[offset:offset + need]
    if len(raster) < need:
        raise TruncatedImageError(f"truncated PPM payload: {len(raster)} of {need} bytes")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3).copy()


def encode_ppm(image: np.ndarray) -> bytes:
    image = np.asarray(image, dtype=np.uint8)
    h, w, _ = image.shape
    return b"P6\n%d %d\n255\n" % (w, h) + image.tobytes()


# -- PNG ------------------------------------------------------------------------

def _png_chunks(data: bytes):
    pos = len(PNG_SIGNATURE)
    while True:
        if pos + 8 > len(data):
            raise TruncatedImageError("truncated PNG: missing IEND")
        length, ctype = struct.unpack(">I4s", data[pos:pos + 8])
        body = data[pos + 8:pos + 8 + length]
        crc = data[pos + 8 + length:pos + 12 + length]
        if len(body) < length or len(crc) < 4:
            raise TruncatedImageError(f"truncated PNG chunk {ctype!r}")
        if zlib.crc32(ctype + body) != struct.unpack(">I", crc)[0]:
            raise ImageDecodeError(f"PNG chunk {ctype!r} fails its CRC check")
        yield ctype, body
        if ctype == b"IEND":
            return
        pos += 12 + length


def _paeth(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    p = a + b - c
    pa, pb, pc = np.abs(p - a), np.abs(p - b), np.abs(p - c)
    return np.where((pa <= pb) & (pa <= pc), a, np.where(pb <= pc, b, c))


def _unfilter(raw: bytes, height: int, width: int, bpp: int) -> np.ndarray:
    stride = width * bpp
    if len(raw) < height * (stride + 1):
        raise TruncatedImageError("truncated PNG image data")
    rows = np.frombuffer(raw, dtype=np.uint8)[:height * (stride + 1)].reshape(height, stride + 1)
    out = np.zeros((height, stride), dtype=np.int32)
    prev = np.zeros(stride, dtype=np.int32)
    for y in range(height):
        ftype = rows[y, 0]
        line = rows[y, 1:].astype(np.int32)
        if ftype == 0:
            cur = line
        elif ftype == 1:
            cur = np.cumsum(line.reshape(width, bpp), axis=0).reshape(-1) % 256
        elif ftype == 2:
            cur = (line + prev) % 256
        elif ftype in (3, 4):
            cur = np.zeros(stride, dtype=np.int32)
            left = np.zeros(bpp, dtype=np.int32)
            up_left = np.zeros(bpp, dtype=np.int32)
            for x in range(width):
                sl = slice(x * bpp, (x + 1) * bpp)
                up = prev[sl]
                pred = (left + up) // 2 if ftype == 3 else _paeth(left, up, up_left)
                cur[sl] = (line[sl] + pred) % 256
                left, up_left = cur[sl], up
        else:
            raise ImageDecodeError(f"invalid PNG filter type {ftype} on row {y}")
        out[y] = cur
        prev = cur
    return out.astype(np.uint8)


def decode_png(data: bytes) -> np.ndarray:
    if not data.startswith(PNG_SIGNATURE):
        raise UnsupportedFormatError("not a PNG file")
    header = None
    idat = bytearray()
    for ctype, body in _png_chunks(data):
        if ctype == b"IHDR":
            header = struct.unpack(">IIBBBBB", body)
        elif ctype == b"IDAT":
            idat += body
    if header is None:
        raise ImageDecodeError("PNG without IHDR chunk")
    width, height, depth, color, compression, filt, interlace = header
    if depth != 8 or color not in (2, 6) or interlace != 0 or compression != 0 or filt != 0:
        raise UnsupportedFormatError(
            f"unsupported PNG variant (bit depth {depth}, color type {color}, interlace {interlace}); "
            "only 8-bit non-interlaced RGB/RGBA is supported"
        )
    bpp = 3 if color == 2 else 4
    try:
        raw = zlib.decompress(bytes(idat))
    except zlib.error as exc:
        raise TruncatedImageError(f"corrupt or truncated PNG image data: {exc}") from exc
    pixels = _unfilter(raw, height, width, bpp).reshape(height, width, bpp)
    return np.ascontiguousarray(pixels[..., :3])


# -- resize / normalize --------------------------------------------------------

def _axis_weights(n_in: int, n_out: int):
    scale = n_in / n_out
    src = (np.arange(n_out) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def resize_bilinear(image: np.ndarray, out_h: int = 30, out_w: int = 30) -> np.ndarray:
    """Bilinear resize with half-pixel centers: src = (dst + 0.5) * scale - 0.5, clamped."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"expected an [H, W, C] image, got shape {list(img.shape)}")
    y0, y1, wy = _axis_weights(img.shape[0], out_h)
    x0, x1, wx = _axis_weights(img.shape[1], out_w)
    rows = img[y0] * (1 - wy)[:, None, None] + img[y1] * wy[:, None, None]
    return rows[:, x0] * (1 - wx)[None, :, None] + rows[:, x1] * wx[None, :, None]


def normalize(image: np.ndarray) -> np.ndarray:
    img = np.asarray(image, dtype=np.float64)
    if img.size and (img.min() < 0 or img.max() > 255):
        raise ValueError(f"pixel values must lie in [0, 255], got [{img.min()}, {img.max()}]")
    return img / 255.0
