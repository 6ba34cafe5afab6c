"""Raster primitives for the structure-based segmentation pipeline.

Conventions: a gray image is a float64 (h, w) array, a binary mask is a
uint8 (h, w) array holding only {0, 1}.  All filters use replicate borders;
flood fill and component labeling are 4-connected.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], np.uint8)  # 4-connectivity


def to_grayscale(rgb: np.ndarray) -> np.ndarray:
    """Luma weights 0.299 / 0.587 / 0.114, kept in floating point."""
    px = np.asarray(rgb, np.float64)
    return px[..., 0] * 0.299 + px[..., 1] * 0.587 + px[..., 2] * 0.114


def laplacian_abs(g: np.ndarray) -> np.ndarray:
    """Absolute value of the 4-neighbor Laplacian, replicate border."""
    p = np.pad(np.asarray(g, np.float64), 1, mode="edge")
    lap = p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:] - 4.0 * p[1:-1, 1:-1]
    return np.abs(lap)


def gaussian_kernel1d(ksize: int, sigma: float) -> np.ndarray:
    if ksize % 2 == 0:
        raise ValueError("kernel size must be odd")
    r = ksize // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(g: np.ndarray, ksize: int, sigma: float) -> np.ndarray:
    """Separable sampled-Gaussian blur (kernel normalized to sum 1)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    k = gaussian_kernel1d(ksize, sigma)
    out = ndimage.correlate1d(np.asarray(g, np.float64), k, axis=1, mode="nearest")
    return ndimage.correlate1d(out, k, axis=0, mode="nearest")


def mean_threshold(g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, np.float64)
    return (g > g.mean()).astype(np.uint8)


def median_filter(m: np.ndarray, ksize: int) -> np.ndarray:
    """Binary median: majority vote in a ksize window via a summed-area table."""
    if ksize % 2 == 0:
        raise ValueError("kernel size must be odd")
    r = ksize // 2
    p = np.pad(np.asarray(m, np.uint8), r, mode="edge").astype(np.int64)
    sat = np.zeros((p.shape[0] + 1, p.shape[1] + 1), np.int64)
    sat[1:, 1:] = p.cumsum(0).cumsum(1)
    h, w = m.shape
    win = (sat[ksize : ksize + h, ksize : ksize + w]
           - sat[0:h, ksize : ksize + w]
           - sat[ksize : ksize + h, 0:w]
           + sat[0:h, 0:w])
    return (win > (ksize * ksize) // 2).astype(np.uint8)


def disc_element(diameter: int) -> np.ndarray:
    """Disc structuring element: offsets with dx^2+dy^2 <= (diameter/2)^2."""
    if diameter % 2 == 0 or diameter < 1:
        raise ValueError("diameter must be odd and >= 1")
    r = diameter // 2
    dy, dx = np.mgrid[-r : r + 1, -r : r + 1]
    return (dx * dx + dy * dy <= (diameter / 2.0) ** 2).astype(np.uint8)

def morph(m: np.ndarray, op: str, diameter: int, iterations: int = 1) -> np.ndarray:
    """Erode or dilate with a disc element; outside-image pixels count as 0."""
    el = disc_element(diameter)
    if op == "erode":
        out = ndimage.binary_erosion(m, el, iterations=iterations, border_value=0)
    elif op == "dilate":
        out = ndimage.binary_dilation(m, el, iterations=iterations, border_value=0)
    else:
        raise ValueError(f"unknown morphology op {op!r}")
    return out.astype(np.uint8)


def distance_transform(m: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance to the nearest 0-pixel (0 on 0-pixels).

    A mask with no 0-pixel at all maps to the documented ceiling
    width + height everywhere.
    """
    m = np.asarray(m)
    if not (m == 0).any():
        return np.full(m.shape, float(m.shape[0] + m.shape[1]), np.float64)
    return ndimage.distance_transform_edt(m)


def flood_fill(m: np.ndarray, seed: tuple[int, int]) -> np.ndarray:
    """4-connected component of seed-valued pixels containing seed (x, y)."""
    x, y = seed
    h, w = m.shape
    if not (0 <= x < w and 0 <= y < h):
        raise ValueError(f"seed {seed} outside {w}x{h} mask")
    eq = (m == m[y, x])
    labels, _ = ndimage.label(eq, structure=_CROSS)
    return (labels == labels[y, x]).astype(np.uint8)


def connected_components(m: np.ndarray) -> tuple[np.ndarray, int]:
    """4-connected labeling of 1-pixels; labels 1..k dense, 0 background."""
    labels, count = ndimage.label(np.asarray(m) != 0, structure=_CROSS)
    return labels.astype(np.int32), int(count)


def resample_nearest(m: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbor resample of a raster onto (h, w), center-aligned."""
    h, w = shape
    ih, iw = m.shape[:2]
    ys = ((2 * np.arange(h) + 1) * ih) // (2 * h)
    xs = ((2 * np.arange(w) + 1) * iw) // (2 * w)
    return m[np.minimum(ys, ih - 1)][:, np.minimum(xs, iw - 1)]
