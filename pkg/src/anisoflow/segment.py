"""Binarisation of maximal-response images into fibre masks.

Pipeline: Niblack local threshold, erosion with a small square, removal of
small connected components.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .orientation import MRParams, mr_estimate


@dataclass(frozen=True)
class NiblackParams:
    window: int
    k: float = 0.6

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError(f"Niblack window must be odd and >= 3, got {self.window}")


def odd_window(sigma2: float) -> int:
    """``round(4*sigma2)`` bumped up to the next odd integer, at least 3."""
    n = max(3, int(round(4.0 * sigma2)))
    return n if n % 2 else n + 1


def local_mean_std(img, window: int):
    """Windowed mean and standard deviation with edge-replicated borders."""
    f = np.asarray(img, dtype=np.float64)
    r = window // 2
    pad = np.pad(f, r + 1, mode="edge")
    # integral images with a zero first row/column
    s1 = np.cumsum(np.cumsum(pad, 0), 1)
    s2 = np.cumsum(np.cumsum(pad * pad, 0), 1)
    h, w = f.shape

    def box(s):
        a = s[window:window + h, window:window + w]
        b = s[:h, window:window + w]
        c = s[window:window + h, :w]
        d = s[:h, :w]
        return a - b - c + d

    n = float(window * window)
    m = box(s1) / n
    var = np.maximum(box(s2) / n - m * m, 0.0)
    return m, np.sqrt(var)


def niblack_threshold(img, p: NiblackParams) -> np.ndarray:
    f = np.asarray(img, dtype=np.float64)
    if p.window > min(f.shape):
        raise ValueError(f"window {p.window} larger than image {f.shape}")
    # shifting by the minimum makes flat regions exactly zero in the sums
    f = f - f.min()
    m, s = local_mean_std(f, p.window)
    # windows whose spread is pure round-off are flat, hence background
    flat = s <= 1e-12 * max(1.0, float(f.max()))
    return (f > m + p.k * s) & ~flat


def global_threshold(img, t: float) -> np.ndarray:
    """Foreground where the min-max normalised image exceeds ``t``."""
    f = np.asarray(img, dtype=np.float64)
    lo, hi = f.min(), f.max()
    if not hi > lo:
        return np.zeros(f.shape, dtype=bool)
    return (f - lo) / (hi - lo) > t


def erode_square(mask, side: int) -> np.ndarray:
    """Keep a pixel iff the ``side x side`` square with that pixel at its
    top-left corner lies entirely in the mask (outside counts as background)."""
    if side < 1:
        raise ValueError("side must be >= 1")
    m = np.asarray(mask, dtype=bool)
    if side == 1:
        return m.copy()
    h, w = m.shape
    pad = np.zeros((h + side - 1, w + side - 1), dtype=bool)
    pad[:h, :w] = m
    out = np.ones_like(m)
    for dy in range(side):
        for dx in range(side):
            out &= pad[dy:dy + h, dx:dx + w]
    return out


def remove_small_components(mask, min_size: int = 100, connectivity: int = 8) -> np.ndarray:
    """Drop connected components with fewer than ``min_size`` pixels."""
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    m = np.asarray(mask, dtype=bool)
    struct = ndimage.generate_binary_structure(2, 2 if connectivity == 8 else 1)
    labels, n = ndimage.label(m, structure=struct)
    if n == 0:
        return m.copy()
    sizes = np.bincount(labels.ravel())
    keep = sizes >= min_size
    keep[0] = False
    return keep[labels]


def segment_pipeline(img, mr: MRParams, niblack: NiblackParams | None = None,
                     erode_side: int = 2, min_size: int = 100,
                     connectivity: int = 8, global_t: float | None = None) -> np.ndarray:
    """MR response -> threshold -> erosion -> small-component removal.

    The threshold is Niblack by default; ``global_t`` switches to a single
    threshold on the min-max normalised response instead.
    """
    if niblack is None:
        niblack = NiblackParams(odd_window(mr.sigma2))
    response = mr_estimate(img, mr).response
    if global_t is None:
        mask = niblack_threshold(response, niblack)
    else:
        mask = global_threshold(response, global_t)
    mask = erode_square(mask, erode_side)
    return remove_small_components(mask, min_size, connectivity)
