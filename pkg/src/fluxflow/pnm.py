"""Binary PGM (P5) and PPM (P6) rasters, maxval 255.

The one image format the pipeline decodes natively: header is plain text,
payload is raw bytes, so the parser is exact and dependency-free. Users
pre-extract video frames to PGM/PPM; compressed formats are out of scope.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import BinaryIO

from .errors import ParseError, TruncatedFile, UnsupportedDepth, UnsupportedFormat

_WHITESPACE = b" \t\r\n\v\f"


@dataclass
class FrameRaster:
    """Decoded frame: row-major 8-bit samples, interleaved for RGB."""

    width: int
    height: int
    channels: int  # 1 (grayscale) or 3 (RGB)
    pixels: bytes

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ParseError(f"channels must be 1 or 3, got {self.channels}")
        expected = self.width * self.height * self.channels
        if len(self.pixels) != expected:
            raise ParseError(
                f"pixel payload is {len(self.pixels)} bytes, expected {expected}"
            )


class _HeaderScanner:
    """Token reader for the PNM header: whitespace-separated, '#' comments."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def skip_separators(self) -> None:
        data, n = self.data, len(self.data)
        while self.pos < n:
            byte = data[self.pos]
            if byte in _WHITESPACE:
                self.pos += 1
            elif byte == ord("#"):
                while self.pos < n and data[self.pos] not in b"\r\n":
                    self.pos += 1
            else:
                return

    def token(self) -> bytes:
        self.skip_separators()
        start = self.pos
        data, n = self.data, len(self.data)
        while self.pos < n and data[self.pos] not in _WHITESPACE and data[self.pos] != ord("#"):
            self.pos += 1
        if self.pos == start:
            raise TruncatedFile("header ended early")
        return data[start : self.pos]

    def int_token(self, what: str) -> int:
        tok = self.token()
        try:
            return int(tok.decode("ascii"))
        except (UnicodeDecodeError, ValueError) as exc:
            raise ParseError(f"bad {what} token {tok!r} in header") from exc


def load_pnm(stream: BinaryIO | bytes) -> FrameRaster:
    """Decode one binary PGM/PPM image.

    Accepts any whitespace and '#'-comments inside the header; after the
    maxval there is exactly one whitespace byte, then the raw payload.
    """
    data = bytes(stream) if isinstance(stream, (bytes, bytearray)) else stream.read()
    if len(data) < 2:
        raise UnsupportedFormat("not a PNM stream (too short)")
    magic = data[:2]
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise UnsupportedFormat(f"unsupported magic {magic!r} (need binary P5 or P6)")

    scanner = _HeaderScanner(data)
    scanner.pos = 2
    width = scanner.int_token("width")
    height = scanner.int_token("height")
    maxval = scanner.int_token("maxval")
    if width <= 0 or height <= 0:
        raise ParseError(f"non-positive dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedDepth(f"maxval {maxval} unsupported (only 255)")
    if scanner.pos >= len(data) or data[scanner.pos] not in _WHITESPACE:
        raise TruncatedFile("missing whitespace delimiter before pixel data")
    start = scanner.pos + 1
    expected = width * height * channels
    payload = data[start : start + expected]
    if len(payload) < expected:
        raise TruncatedFile(
            f"pixel data truncated: have {len(payload)} of {expected} bytes"
        )
    return FrameRaster(width=width, height=height, channels=channels, pixels=payload)


def load_pnm_file(path: str | os.PathLike) -> FrameRaster:
    with open(path, "rb") as fh:
        return load_pnm(fh)


def encode_pnm(raster: FrameRaster) -> bytes:
    """Canonical encoding: single-space header, newline, raw payload."""
    magic = b"P5" if raster.channels == 1 else b"P6"
    header = b"%s\n%d %d\n255\n" % (magic, raster.width, raster.height)
    return header + raster.pixels
