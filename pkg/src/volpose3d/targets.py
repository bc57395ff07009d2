"""Ground-truth heatmaps / 3D part-affinity vectormaps and the volumetric losses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .skeleton import PoseLayout
from .volume import Volume, VoxelGrid

LOSS_KINDS = ("L1", "L2", "SmoothL1")


@dataclass(eq=False)
class VolumetricOutput:
    heatmaps: Volume
    vectormaps: Volume

    def __post_init__(self):
        if self.heatmaps.grid != self.vectormaps.grid:
            raise ValueError("heatmaps and vectormaps must share a grid")
        if self.vectormaps.channels % 3:
            raise ValueError("vectormap channel count must be a multiple of 3")

    @property
    def grid(self) -> VoxelGrid:
        return self.heatmaps.grid

    @property
    def n_gt(self) -> int:
        return self.heatmaps.channels + self.vectormaps.channels

    def vectormap(self, s: int) -> np.ndarray:
        """``(X, Y, Z, 3)`` field of PAF ``s``."""
        return self.vectormaps.data[..., 3 * s : 3 * s + 3]

    def stacked(self) -> Volume:
        names = self.heatmaps.channel_names + self.vectormaps.channel_names
        data = np.concatenate([self.heatmaps.data, self.vectormaps.data], axis=-1)
        return Volume(self.grid, data, names)

    @classmethod
    def split(cls, volume: Volume, layout: PoseLayout) -> VolumetricOutput:
        if volume.channels != layout.n_gt:
            raise ValueError(
                f"volume has {volume.channels} channels, layout needs {layout.n_gt}"
            )
        nj = layout.n_joints
        names = volume.channel_names or layout.channel_names()
        return cls(
            Volume(volume.grid, volume.data[..., :nj], names[:nj]),
            Volume(volume.grid, volume.data[..., nj:], names[nj:]),
        )

    def vector_triples(self) -> list[int]:
        return list(range(0, self.vectormaps.channels, 3))


def render_heatmaps(skeletons, grid: VoxelGrid, sigma: float = 1.0, n_joints: int | None = None) -> Volume:
    """Per-joint 3D Gaussians (std ``sigma`` voxels); overlapping persons
    combine by maximum."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    skeletons = list(skeletons)
    if n_joints is None:
        n_joints = len(skeletons[0].joints) if skeletons else 14
    out = np.zeros(grid.dims + (n_joints,))
    s_m = sigma * grid.voxel_size
    axes = [np.asarray(grid.origin[a]) + (np.arange(grid.dims[a]) + 0.5) * grid.voxel_size for a in range(3)]
    for skel in skeletons:
        for j in np.flatnonzero(skel.present):
            p = skel.joints[j]
            # separable Gaussian: exp(-|x-p|^2/2s^2) = prod over axes
            gx, gy, gz = (np.exp(-((axes[a] - p[a]) ** 2) / (2 * s_m**2)) for a in range(3))
            g = gx[:, None, None] * gy[None, :, None] * gz[None, None, :]
            np.maximum(out[..., j], g, out=out[..., j])
    return Volume(grid, out)


def _limb_mask(centers: np.ndarray, a: np.ndarray, b: np.ndarray, radius_m: float) -> np.ndarray:
    """Voxel centers inside the finite cylinder of radius ``radius_m`` around
    segment ``a -> b`` (no end caps)."""
    ab = b - a
    length = np.linalg.norm(ab)
    if length == 0:
        return np.zeros(centers.shape[:-1], dtype=bool)
    d = ab / length
    rel = centers - a
    along = rel @ d
    perp = rel - along[..., None] * d
    perp_dist = np.sqrt(np.einsum("...i,...i->...", perp, perp))
    return (along >= 0) & (along <= length) & (perp_dist <= radius_m)


def render_vectormaps(skeletons, grid: VoxelGrid, layout: PoseLayout, limb_radius: float = 1.0) -> Volume:
    """Unit parent->child vectors inside each limb tube; several persons
    covering one voxel with the same limb are averaged."""
    if not limb_radius > 0:
        raise ValueError("limb_radius must be positive")
    skeletons = list(skeletons)
    centers = grid.voxel_centers()
    out = np.zeros(grid.dims + (3 * layout.n_pafs,))
    radius_m = limb_radius * grid.voxel_size
    for s, (pa, ch) in enumerate(layout.paf_edges):
        acc = np.zeros(grid.dims + (3,))
        count = np.zeros(grid.dims)
        for skel in skeletons:
            if not (skel.present[pa] and skel.present[ch]):
                continue
            a, b = skel.joints[pa], skel.joints[ch]
            length = np.linalg.norm(b - a)
            if length == 0:
                continue
            mask = _limb_mask(centers, a, b, radius_m)
            acc[mask] += (b - a) / length
            count[mask] += 1
        hit = count > 0
        acc[hit] /= count[hit][:, None]
        out[..., 3 * s : 3 * s + 3] = acc
    names = [n for n in layout.channel_names()[layout.n_joints :]]
    return Volume(grid, out, names)


def render_targets(skeletons, grid: VoxelGrid, layout: PoseLayout, sigma: float = 1.0, limb_radius: float = 1.0) -> VolumetricOutput:
    hm = render_heatmaps(skeletons, grid, sigma, n_joints=layout.n_joints)
    hm.channel_names = layout.channel_names()[: layout.n_joints]
    return VolumetricOutput(hm, render_vectormaps(skeletons, grid, layout, limb_radius))


def elementwise_loss(diff: np.ndarray, kind: str, beta: float = 1.0) -> np.ndarray:
    a = np.abs(diff)
    if kind == "L1":
        return a
    if kind == "L2":
        return a * a
    if kind == "SmoothL1":
        return np.where(a < beta, 0.5 * a * a / beta, a - 0.5 * beta)
    raise ValueError(f"unknown loss kind {kind!r}; expected one of {LOSS_KINDS}")


def loss(
    pred: VolumetricOutput,
    gt: VolumetricOutput,
    kind: str = "SmoothL1",
    hm_weight: float = 1.0,
    vm_weight: float = 1.0,
) -> tuple[float, float, float]:
    """Returns ``(total, heatmap_part, vectormap_part)``; each part is a mean
    over its elements."""
    if hm_weight < 0 or vm_weight < 0:
        raise ValueError("loss weights must be non-negative")
    for name in ("heatmaps", "vectormaps"):
        ps, gs = getattr(pred, name).data.shape, getattr(gt, name).data.shape
        if ps != gs:
            raise ValueError(f"{name} shape mismatch: {ps} vs {gs}")
    hm = float(elementwise_loss(pred.heatmaps.data - gt.heatmaps.data, kind).mean())
    vm = float(elementwise_loss(pred.vectormaps.data - gt.vectormaps.data, kind).mean())
    return hm_weight * hm + vm_weight * vm, hm, vm
