"""Frame feature providers: color histograms over binary PPM images and seeded
random projections for dimensionality reduction."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass
class PpmImage:
    """Decoded binary (P6) portable pixmap with 8-bit channels."""

    width: int
    height: int
    pixels: np.ndarray  # (height, width, 3) uint8

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dimensions must be >= 1, got {self.width}x{self.height}")
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.shape != (self.height, self.width, 3):
            raise ValueError(f"pixel array shape {px.shape} does not match {self.height}x{self.width}x3")
        self.pixels = px


@dataclass
class HistogramConfig:
    bins_per_channel: int = 8

    def __post_init__(self):
        if not 1 <= self.bins_per_channel <= 256:
            raise ValueError(f"bins_per_channel must be in [1, 256], got {self.bins_per_channel}")


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            while pos < n and data[pos : pos + 1] != b"\n":
                pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ValueError("truncated PPM header")
    return data[start:pos], pos


def load_ppm(path) -> PpmImage:
    """Parse a binary P6 pixmap with maxval 255.  Header comments are allowed."""
    data = Path(path).read_bytes()
    magic, pos = _next_token(data, 0)
    if magic != b"P6":
        raise ValueError(f"unsupported PPM magic {magic!r}, expected binary 'P6'")
    fields = []
    for _ in range(3):
        tok, pos = _next_token(data, pos)
        try:
            fields.append(int(tok))
        except ValueError as exc:
            raise ValueError(f"bad PPM header token {tok!r}") from exc
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise ValueError(f"bad PPM dimensions {width}x{height}")
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}, expected 255")
    pos += 1  # exactly one whitespace byte after maxval
    expected = width * height * 3
    body = data[pos : pos + expected]
    if len(body) != expected:
        raise ValueError(f"truncated pixel data: got {len(body)} bytes, expected {expected}")
    pixels = np.frombuffer(body, dtype=np.uint8).reshape(height, width, 3).copy()
    return PpmImage(width=width, height=height, pixels=pixels)


def save_ppm(img: PpmImage, path) -> None:
    """Write a binary P6 pixmap with maxval 255."""
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + np.ascontiguousarray(img.pixels, dtype=np.uint8).tobytes())


def histogram_descriptor(img: PpmImage, cfg: HistogramConfig | None = None) -> np.ndarray:
    """Concatenated per-channel color histogram, each channel L1-normalized.

    Pixel value v lands in bin v * bins // 256, so 255 maps to the last bin.
    Returns a float64 vector of length 3 * bins_per_channel that sums to 3.
    """
    cfg = cfg or HistogramConfig()
    bins = cfg.bins_per_channel
    n_pixels = img.width * img.height
    parts = []
    for c in range(3):
        values = img.pixels[:, :, c].ravel().astype(np.int64)
        counts = np.bincount(values * bins // 256, minlength=bins)
        parts.append(counts / n_pixels)
    return np.concatenate(parts)


def random_projection(xs: np.ndarray, target_dim: int, seed: int = 0) -> np.ndarray:
    """Project rows of xs to target_dim with a seeded Gaussian matrix.

    Entries are drawn i.i.d. N(0, 1/target_dim), which keeps pairwise
    Euclidean distances approximately unchanged in expectation.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2:
        raise ValueError(f"xs must be 2-d, got shape {xs.shape}")
    if target_dim < 1:
        raise ValueError(f"target_dim must be >= 1, got {target_dim}")
    rng = np.random.default_rng(seed)
    proj = rng.normal(0.0, 1.0 / np.sqrt(target_dim), size=(xs.shape[1], target_dim))
    return xs @ proj
