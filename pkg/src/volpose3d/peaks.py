"""Sub-voxel peak detection: non-local-maxima suppression on a cubic
neighbourhood followed by a mass-weighted centroid over the same
neighbourhood.

Neighbourhoods are clipped at the grid border (no padding).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter

DEFAULT_RADIUS = 2
DEFAULT_THRESHOLD = 0.3


@dataclass(frozen=True)
class Peak:
    position: np.ndarray  # continuous grid coordinates
    score: float
    index: tuple[int, int, int]


def _window(x, radius: int, shape) -> tuple[slice, ...]:
    return tuple(slice(max(c - radius, 0), min(c + radius + 1, n)) for c, n in zip(x, shape))


def nms(h: np.ndarray, radius: int = DEFAULT_RADIUS, threshold: float = DEFAULT_THRESHOLD) -> list[tuple[int, int, int]]:
    """Integer voxels that are the maximum of their ``(2r+1)^3`` neighbourhood
    and score at least ``threshold``.

    On plateaus only the lexicographically smallest voxel of the neighbourhood
    is kept. Output is sorted lexicographically.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 3:
        raise ValueError("nms expects a single-channel 3D array")
    local_max = maximum_filter(h, size=2 * radius + 1, mode="constant", cval=-np.inf)
    cand = np.argwhere((h == local_max) & (h >= threshold))
    keep = []
    for x in map(tuple, cand):
        win = h[_window(x, radius, h.shape)]
        lo = tuple(max(c - radius, 0) for c in x)
        ties = np.argwhere(win == h[x]) + lo
        # first tie in C order is the lexicographically smallest index
        if tuple(ties[0]) == x:
            keep.append(tuple(int(c) for c in x))
    return keep


def refine_subvoxel(h: np.ndarray, x, radius: int = DEFAULT_RADIUS) -> np.ndarray:
    """Mass-weighted centroid of ``h`` over the clipped neighbourhood of ``x``."""
    h = np.asarray(h, dtype=np.float64)
    x = tuple(int(c) for c in x)
    win = h[_window(x, radius, h.shape)]
    mass = win.sum()
    if not mass > 0:
        raise ValueError(f"neighbourhood of {x} has no positive mass")
    lo = np.array([max(c - radius, 0) for c in x], dtype=np.float64)
    coords = np.meshgrid(*(np.arange(n, dtype=np.float64) for n in win.shape), indexing="ij")
    return np.array([(win * c).sum() / mass for c in coords]) + lo


def detect(
    h: np.ndarray,
    radius: int = DEFAULT_RADIUS,
    threshold: float = DEFAULT_THRESHOLD,
    refine: bool = True,
) -> list[Peak]:
    h = np.asarray(h, dtype=np.float64)
    peaks = []
    for x in nms(h, radius, threshold):
        pos = refine_subvoxel(h, x, radius) if refine else np.array(x, dtype=np.float64)
        peaks.append(Peak(pos, float(h[x]), x))
    return peaks


def detect_all(heatmaps, radius: int = DEFAULT_RADIUS, threshold: float = DEFAULT_THRESHOLD, refine: bool = True) -> list[list[Peak]]:
    """Run :func:`detect` on every channel of an ``(X, Y, Z, C)`` array or Volume."""
    data = getattr(heatmaps, "data", heatmaps)
    return [detect(data[..., c], radius, threshold, refine) for c in range(data.shape[-1])]
