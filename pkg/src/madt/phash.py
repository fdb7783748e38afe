"""64-bit perceptual hashing of grayscale images.

Pipeline: bilinear resize to 32x32, 2-D DCT-II, take the top-left 8x8
coefficient block, threshold each coefficient against the median of the 63
AC coefficients (the DC term is excluded from the median but still gets a
bit). Bit i counts row-major from the top-left coefficient, stored at bit
position 63 - i of the returned integer.
"""
from __future__ import annotations

import numpy as np
from scipy.fft import dct

from .errors import EmptyImage

HASH_BITS = 64
_RESIZE = 32
_BLOCK = 8


def _bilinear_resize(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample with pixel-center alignment."""
    in_h, in_w = image.shape
    if in_h == out_h and in_w == out_w:
        return image.astype(np.float64)
    # Map output pixel centers into input coordinates.
    ys = (np.arange(out_h) + 0.5) * in_h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * in_w / out_w - 0.5
    ys = np.clip(ys, 0, in_h - 1)
    xs = np.clip(xs, 0, in_w - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    img = image.astype(np.float64)
    top = img[y0][:, x0] * (1 - wx) + img[y0][:, x1] * wx
    bottom = img[y1][:, x0] * (1 - wx) + img[y1][:, x1] * wx
    return top * (1 - wy) + bottom * wy


def phash64(image: np.ndarray) -> int:
    """Perceptual hash of a 2-D grayscale pixel grid."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise EmptyImage(f"need a non-empty 2-D grayscale image, got shape {img.shape}")
    small = _bilinear_resize(img, _RESIZE, _RESIZE)
    coeffs = dct(dct(small, axis=0, norm="ortho"), axis=1, norm="ortho")
    block = coeffs[:_BLOCK, :_BLOCK].reshape(-1)
    median = float(np.median(block[1:]))  # AC coefficients only
    value = 0
    for i, c in enumerate(block):
        if c > median:
            value |= 1 << (HASH_BITS - 1 - i)
    return value


def hamming64(a: int, b: int) -> int:
    """Number of differing bits between two 64-bit hashes."""
    return ((int(a) ^ int(b)) & (2**HASH_BITS - 1)).bit_count()
