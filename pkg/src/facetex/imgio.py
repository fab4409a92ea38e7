"""Minimal raster codecs: 8-bit PNG (non-interlaced) and PGM/PPM.

Decoding always yields an RGB uint8 array of shape (height, width, 3);
single-channel sources are replicated across the three channels and alpha
channels are dropped. Encoding writes 8-bit grayscale or RGB PNG with no
scanline filtering, which keeps output bytes deterministic.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import DecodeError, UnsupportedFormatError

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_PNG_CHANNELS = {0: 1, 2: 3, 4: 2, 6: 4}


def decode_image(data: bytes) -> np.ndarray:
    """Decode PNG or PGM/PPM bytes into an (H, W, 3) uint8 RGB array."""
    if data[:8] == _PNG_SIGNATURE:
        return _decode_png(data)
    if data[:2] in (b"P2", b"P3", b"P5", b"P6"):
        return _decode_pnm(data)
    raise UnsupportedFormatError(
        "unrecognized image format (expected PNG signature or P2/P3/P5/P6 header)"
    )


def read_image(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_image(fh.read())


# --------------------------------------------------------------------------
# PNG
# --------------------------------------------------------------------------

def _decode_png(data: bytes) -> np.ndarray:
    pos = 8
    width = height = None
    color_type = None
    idat = bytearray()
    idat_offset = None
    seen_iend = False

    while pos < len(data):
        if pos + 8 > len(data):
            raise DecodeError(f"truncated chunk header at offset {pos}")
        (length,) = struct.unpack(">I", data[pos:pos + 4])
        ctype = data[pos + 4:pos + 8]
        body_start = pos + 8
        body_end = body_start + length
        if body_end + 4 > len(data):
            raise DecodeError(f"truncated chunk data at offset {body_start}")
        body = data[body_start:body_end]
        (crc,) = struct.unpack(">I", data[body_end:body_end + 4])
        if zlib.crc32(ctype + body) & 0xFFFFFFFF != crc:
            raise DecodeError(f"CRC mismatch in {ctype.decode('latin1')} chunk at offset {pos}")

        if ctype == b"IHDR":
            if length != 13:
                raise DecodeError(f"IHDR length {length} != 13 at offset {pos}")
            width, height, bit_depth, color_type, comp, filt, interlace = struct.unpack(
                ">IIBBBBB", body
            )
            if width < 1 or height < 1:
                raise DecodeError(f"invalid dimensions {width}x{height} at offset {pos}")
            if bit_depth != 8:
                raise UnsupportedFormatError(f"unsupported bit depth {bit_depth} (only 8)")
            if color_type not in _PNG_CHANNELS:
                raise UnsupportedFormatError(f"unsupported color type {color_type}")
            if interlace != 0:
                raise UnsupportedFormatError("interlaced PNG not supported")
            if comp != 0 or filt != 0:
                raise DecodeError(f"reserved compression/filter method at offset {pos}")
        elif ctype == b"IDAT":
            if width is None:
                raise DecodeError(f"IDAT before IHDR at offset {pos}")
            if idat_offset is None:
                idat_offset = pos
            idat.extend(body)
        elif ctype == b"IEND":
            seen_iend = True
            break
        pos = body_end + 4

    if width is None:
        raise DecodeError("missing IHDR chunk")
    if not idat:
        raise DecodeError("missing IDAT data")
    if not seen_iend:
        raise DecodeError(f"missing IEND chunk (file ends at offset {len(data)})")

    try:
        raw = zlib.decompress(bytes(idat))
    except zlib.error as exc:
        raise DecodeError(f"corrupt IDAT stream starting at offset {idat_offset}: {exc}") from None

    channels = _PNG_CHANNELS[color_type]
    stride = width * channels
    if len(raw) != height * (stride + 1):
        raise DecodeError(
            f"decompressed size {len(raw)} != expected {height * (stride + 1)}"
        )

    out = np.empty((height, stride), dtype=np.uint8)
    prev = np.zeros(stride, dtype=np.uint8)
    for row in range(height):
        ftype = raw[row * (stride + 1)]
        line = np.frombuffer(
            raw, dtype=np.uint8, count=stride, offset=row * (stride + 1) + 1
        )
        recon = _unfilter_row(ftype, line, prev, channels, row)
        out[row] = recon
        prev = recon

    pixels = out.reshape(height, width, channels)
    if channels == 1:
        return np.repeat(pixels, 3, axis=2)
    if channels == 2:
        return np.repeat(pixels[:, :, :1], 3, axis=2)
    if channels == 4:
        return pixels[:, :, :3].copy()
    return pixels


def _unfilter_row(ftype, line, prev, bpp, row):
    if ftype == 0:
        return line.copy()
    if ftype == 2:
        return line + prev  # uint8 wraps mod 256
    cur = line.astype(np.int32)
    up = prev.astype(np.int32)
    recon = np.empty(len(line), dtype=np.int32)
    if ftype == 1:
        for i in range(len(line)):
            a = recon[i - bpp] if i >= bpp else 0
            recon[i] = (cur[i] + a) & 0xFF
    elif ftype == 3:
        for i in range(len(line)):
            a = recon[i - bpp] if i >= bpp else 0
            recon[i] = (cur[i] + (a + up[i]) // 2) & 0xFF
    elif ftype == 4:
        for i in range(len(line)):
            a = recon[i - bpp] if i >= bpp else 0
            c = up[i - bpp] if i >= bpp else 0
            b = up[i]
            p = a + b - c
            pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
            if pa <= pb and pa <= pc:
                pred = a
            elif pb <= pc:
                pred = b
            else:
                pred = c
            recon[i] = (cur[i] + pred) & 0xFF
    else:
        raise DecodeError(f"invalid filter type {ftype} on scanline {row}")
    return recon.astype(np.uint8)


def encode_png(pixels: np.ndarray) -> bytes:
    """Encode a (H, W) grayscale or (H, W, 3) RGB uint8 array as PNG bytes."""
    arr = np.asarray(pixels)
    if arr.dtype != np.uint8:
        raise UnsupportedFormatError(f"encode_png expects uint8 data, got {arr.dtype}")
    if arr.ndim == 2:
        color_type = 0
    elif arr.ndim == 3 and arr.shape[2] == 3:
        color_type = 2
    else:
        raise UnsupportedFormatError(f"encode_png expects (H,W) or (H,W,3), got {arr.shape}")

    height, width = arr.shape[:2]
    flat = arr.reshape(height, -1)
    scanlines = bytearray()
    for row in range(height):
        scanlines.append(0)  # filter type None
        scanlines.extend(flat[row].tobytes())

    ihdr = struct.pack(">IIBBBBB", width, height, 8, color_type, 0, 0, 0)
    return b"".join(
        [
            _PNG_SIGNATURE,
            _chunk(b"IHDR", ihdr),
            _chunk(b"IDAT", zlib.compress(bytes(scanlines), 6)),
            _chunk(b"IEND", b""),
        ]
    )


def write_png(path, pixels: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_png(pixels))


def _chunk(ctype: bytes, body: bytes) -> bytes:
    return (
        struct.pack(">I", len(body))
        + ctype
        + body
        + struct.pack(">I", zlib.crc32(ctype + body) & 0xFFFFFFFF)
    )


# --------------------------------------------------------------------------
# PGM / PPM
# --------------------------------------------------------------------------

def _decode_pnm(data: bytes) -> np.ndarray:
    magic = data[:2]
    channels = 3 if magic in (b"P3", b"P6") else 1
    ascii_data = magic in (b"P2", b"P3")

    pos = 2
    header = []
    while len(header) < 3:
        # skip whitespace and '#' comments
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise DecodeError(f"malformed {magic.decode()} header token at offset {start}")
        header.append(int(token))
    width, height, maxval = header
    if width < 1 or height < 1:
        raise DecodeError(f"invalid dimensions {width}x{height} in header")
    if maxval > 255 or maxval < 1:
        raise UnsupportedFormatError(f"unsupported maxval {maxval} (only 8-bit)")

    count = width * height * channels
    if ascii_data:
        try:
            values = [int(t) for t in data[pos:].split()]
        except ValueError:
            raise DecodeError(f"non-numeric sample in ASCII data after offset {pos}") from None
        if len(values) < count:
            raise DecodeError(f"truncated data: {len(values)} samples, expected {count}")
        samples = np.array(values[:count], dtype=np.int64)
    else:
        pos += 1  # single whitespace after maxval
        if len(data) - pos < count:
            raise DecodeError(
                f"truncated data at offset {pos}: {len(data) - pos} bytes, expected {count}"
            )
        samples = np.frombuffer(data, dtype=np.uint8, count=count, offset=pos).astype(np.int64)

    if samples.max(initial=0) > maxval:
        raise DecodeError(f"sample exceeds maxval {maxval}")
    if maxval != 255:
        samples = (samples * 255 + maxval // 2) // maxval
    pixels = samples.astype(np.uint8).reshape(height, width, channels)
    if channels == 1:
        pixels = np.repeat(pixels, 3, axis=2)
    return pixels
