"""Color-histogram entropy of netpbm images, plus nearest-neighbour resampling."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from faceuniq.dataset import DataFormatError

_WHITESPACE = b" \t\n\r\v\f"


@dataclass(frozen=True)
class Image:
    """Pixels as an ``(height, width, channels)`` unsigned integer array."""

    pixels: np.ndarray
    depth: int = 8

    def __post_init__(self) -> None:
        px = self.pixels
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise ValueError("pixels must have shape (height, width, 1|3)")
        if self.depth not in (8, 16):
            raise ValueError("depth must be 8 or 16")
        if px.size and (px.min() < 0 or px.max() >= 1 << self.depth):
            raise ValueError(f"pixel values must lie in [0, 2^{self.depth})")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def color_depth(self) -> int:
        """Number of representable colors."""
        return 1 << (self.depth * self.channels)

    @classmethod
    def from_array(cls, arr, depth: int | None = None) -> Image:
        arr = np.asarray(arr)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if depth is None:
            depth = 8 if arr.size == 0 or arr.max() < 256 else 16
        return cls(arr.astype(np.uint16 if depth == 16 else np.uint8), depth)


def _entropy_of_counts(counts: np.ndarray, total: int) -> float:
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum()) + 0.0


def _color_codes(img: Image) -> np.ndarray:
    px = img.pixels.reshape(-1, img.channels).astype(np.uint64)
    codes = np.zeros(len(px), dtype=np.uint64)
    for ch in range(img.channels):
        codes = (codes << np.uint64(img.depth)) | px[:, ch]
    return codes


def image_entropy(img: Image) -> float:
    """Shannon entropy in bits of the joint color histogram (one symbol per pixel color tuple)."""
    total = img.width * img.height
    if total == 0:
        raise ValueError("zero-area image")
    _, counts = np.unique(_color_codes(img), return_counts=True)
    return _entropy_of_counts(counts, total)


def channel_entropies(img: Image) -> tuple[float, ...]:
    """Entropy of each channel's own histogram, reported separately from the joint value."""
    total = img.width * img.height
    if total == 0:
        raise ValueError("zero-area image")
    flat = img.pixels.reshape(-1, img.channels)
    return tuple(
        _entropy_of_counts(np.bincount(flat[:, ch], minlength=1), total)
        for ch in range(img.channels)
    )


def resample(img: Image, new_width: int, new_height: int) -> Image:
    """Nearest-neighbour resize: target pixel ``(y, x)`` takes source ``(y*H//h, x*W//w)``."""
    if new_width < 1 or new_height < 1:
        raise ValueError("target dimensions must be >= 1")
    if img.width == 0 or img.height == 0:
        raise ValueError("zero-area image")
    ys = np.arange(new_height) * img.height // new_height
    xs = np.arange(new_width) * img.width // new_width
    return Image(img.pixels[ys][:, xs].copy(), img.depth)


# --- netpbm ------------------------------------------------------------------

_FORMATS = {b"P2": (1, False), b"P3": (3, False), b"P5": (1, True), b"P6": (3, True)}


def _tokens(data: bytes, pos: int, count: int) -> tuple[list[int], int]:
    """Read ``count`` whitespace-separated integers, skipping ``#`` comments."""
    out = []
    n = len(data)
    while len(out) < count:
        while pos < n and data[pos] in _WHITESPACE:
            pos += 1
        if pos < n and data[pos] == ord("#"):
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < n and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
            pos += 1
        if start == pos:
            raise DataFormatError(f"truncated header at offset {pos}")
        try:
            out.append(int(data[start:pos]))
        except ValueError:
            raise DataFormatError(f"non-integer token at offset {start}") from None
    return out, pos


def parse_pnm(data: bytes) -> Image:
    magic = data[:2]
    if len(data) < 2 or magic[:1] != b"P" or not magic[1:2].isdigit():
        raise DataFormatError("bad magic at offset 0")
    if magic not in _FORMATS:
        raise DataFormatError(f"unsupported format {magic.decode('latin-1')} at offset 0")
    channels, binary = _FORMATS[magic]
    (width, height, maxval), pos = _tokens(data, 2, 3)
    if width < 1 or height < 1:
        raise DataFormatError(f"bad dimensions {width}x{height} at offset {pos}")
    if not 1 <= maxval <= 65535:
        raise DataFormatError(f"maxval {maxval} outside [1, 65535] at offset {pos}")
    depth = 8 if maxval < 256 else 16
    nvalues = width * height * channels
    if binary:
        if pos >= len(data) or data[pos] not in _WHITESPACE:
            raise DataFormatError(f"missing whitespace before raster at offset {pos}")
        pos += 1
        nbytes = nvalues * (depth // 8)
        if len(data) - pos < nbytes:
            raise DataFormatError(
                f"truncated raster at offset {len(data)}: need {nbytes} bytes, have {len(data) - pos}"
            )
        values = np.frombuffer(data, dtype=">u2" if depth == 16 else np.uint8, count=nvalues, offset=pos)
    else:
        try:
            raw, end = _tokens(data, pos, nvalues)
        except DataFormatError as exc:
            raise DataFormatError(f"truncated raster: {exc}") from None
        values = np.array(raw, dtype=np.int64)
        if values.min() < 0:
            raise DataFormatError("negative sample value")
    if values.max() > maxval:
        raise DataFormatError(f"sample value exceeds maxval {maxval}")
    pixels = values.astype(np.uint16 if depth == 16 else np.uint8).reshape(height, width, channels)
    return Image(pixels, depth)


def load_pnm(path) -> Image:
    """Read a PGM (P2/P5) or PPM (P3/P6) file."""
    return parse_pnm(Path(path).read_bytes())


def write_pnm(img: Image, path, binary: bool = True) -> None:
    maxval = (1 << img.depth) - 1
    magic = {(1, False): "P2", (3, False): "P3", (1, True): "P5", (3, True): "P6"}[img.channels, binary]
    header = f"{magic}\n{img.width} {img.height}\n{maxval}\n".encode()
    if binary:
        body = img.pixels.astype(">u2" if img.depth == 16 else np.uint8).tobytes()
    else:
        rows = img.pixels.reshape(img.height, -1)
        body = "".join(" ".join(map(str, r)) + "\n" for r in rows.tolist()).encode()
    Path(path).write_bytes(header + body)


def entropy_bound(img: Image) -> float:
    """Upper bound ``log2(min(C, pixels))`` on :func:`image_entropy`."""
    return math.log2(min(img.color_depth, img.width * img.height))
