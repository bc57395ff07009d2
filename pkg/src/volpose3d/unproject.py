"""Multi-view unprojection of 2D feature maps into a voxel volume.

Every voxel center is projected into each view, the view's feature map is
sampled bilinearly and the samples are averaged over the ``m`` views.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Camera
from .volume import Volume, VoxelGrid

#: image pixel ``u`` maps to feature-map coordinate ``u / stride`` (texel
#: centers at integer coordinates, no half-pixel offset)
FEATURE_COORD_OFFSET = 0.0


@dataclass(eq=False)
class FeatureMap2D:
    """Per-view activation of shape ``(H, W, C)``.

    ``stride`` is the number of camera-image pixels per feature-map pixel.
    """

    data: np.ndarray
    stride: float = 16.0
    channel_names: tuple[str, ...] = ()

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[..., None]
        if data.ndim != 3 or min(data.shape) < 1:
            raise ValueError(f"feature map must be (H, W, C), got shape {data.shape}")
        if not self.stride > 0:
            raise ValueError("stride must be positive")
        self.data = data
        self.stride = float(self.stride)
        self.channel_names = tuple(self.channel_names)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


def image_to_feature(uv, stride: float) -> np.ndarray:
    return np.asarray(uv, dtype=np.float64) / stride - FEATURE_COORD_OFFSET


def _bilinear_gather(data: np.ndarray, fx: np.ndarray, fy: np.ndarray) -> np.ndarray:
    """Sample ``data (H, W, C)`` at feature coordinates; texels outside the map
    read as zero. NaN coordinates yield zero."""
    h, w, c = data.shape
    out = np.zeros(fx.shape + (c,))
    # points further than one texel outside the map touch no texel
    live = (fx > -1) & (fx < w) & (fy > -1) & (fy < h)
    if not np.any(live):
        return out
    # one ring of zero texels replaces per-corner bounds checks
    padded = np.zeros((h + 2) * (w + 2) * c).reshape(h + 2, w + 2, c)
    padded[1:-1, 1:-1] = data
    flat = padded.reshape(-1, c)
    x = fx[live] + 1.0
    y = fy[live] + 1.0
    x0 = np.floor(x)
    y0 = np.floor(y)
    ax = (x - x0)[:, None]
    ay = (y - y0)[:, None]
    i00 = y0.astype(np.intp) * (w + 2) + x0.astype(np.intp)
    row = w + 2
    res = flat[i00]
    res *= (1 - ax) * (1 - ay)
    for offset, wgt in ((1, ax * (1 - ay)), (row, (1 - ax) * ay), (row + 1, ax * ay)):
        tmp = flat[i00 + offset]
        tmp *= wgt
        res += tmp
    out[live] = res
    return out


def sample_bilinear(fmap: FeatureMap2D, p) -> np.ndarray:
    """Channel vector of ``fmap`` at camera-image pixel ``p``.

    Accepts a single point ``(2,)`` or a batch ``(..., 2)``.
    """
    p = np.asarray(p, dtype=np.float64)
    f = image_to_feature(p, fmap.stride)
    return _bilinear_gather(fmap.data, f[..., 0], f[..., 1])


def _check_views(views) -> int:
    views = list(views)
    if not views:
        raise ValueError("unproject needs at least one view")
    channels = {fmap.channels for fmap, _ in views}
    if len(channels) != 1:
        raise ValueError(f"feature maps disagree on channel count: {sorted(channels)}")
    return channels.pop()


def unproject(
    views,
    grid: VoxelGrid,
    visibility_normalized: bool = False,
    channel_names=(),
) -> Volume:
    """Average the bilinear samples of every view at every voxel center.

    Parameters
    ----------
    views : sequence of (FeatureMap2D, Camera)
    grid : VoxelGrid
    visibility_normalized : bool
        Divide by the number of views that actually see the voxel instead of
        by the total number of views ``m``.
    """
    views = list(views)
    n_channels = _check_views(views)
    centers = grid.voxel_centers().reshape(-1, 3)
    acc = np.zeros((centers.shape[0], n_channels))
    seen = np.zeros(centers.shape[0])
    for fmap, camera in views:
        uv, valid = camera.project_points(centers)
        f = image_to_feature(uv, fmap.stride)
        acc += _bilinear_gather(fmap.data, f[:, 0], f[:, 1])
        if visibility_normalized:
            h, w = fmap.height, fmap.width
            seen += valid & (f[:, 0] > -1) & (f[:, 0] < w) & (f[:, 1] > -1) & (f[:, 1] < h)
    if visibility_normalized:
        acc /= np.maximum(seen, 1.0)[:, None]
    else:
        acc /= len(views)
    names = channel_names or views[0][0].channel_names
    return Volume(grid, acc.reshape(grid.dims + (n_channels,)), list(names))

