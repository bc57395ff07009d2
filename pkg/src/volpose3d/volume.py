"""Voxel grids, dense volumes, the binary volume container and 3D augmentations."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .skeleton import Skeleton

MAGIC = b"VOXVOL01".ljust(16, b"\0")


@dataclass(frozen=True)
class VoxelGrid:
    """Axis-aligned cube of ``dims`` voxels with edge ``voxel_size`` (meters).

    ``origin`` is the world position of the minimal corner; voxel ``g`` has its
    center at ``origin + (g + 0.5) * voxel_size``.
    """

    origin: tuple[float, float, float] = (-2.4, -2.4, 0.0)
    dims: tuple[int, int, int] = (64, 64, 32)
    voxel_size: float = 0.075

    def __post_init__(self):
        origin = tuple(float(x) for x in self.origin)
        dims = tuple(int(d) for d in self.dims)
        if len(origin) != 3 or len(dims) != 3:
            raise ValueError("origin and dims must have three components")
        if min(dims) < 1:
            raise ValueError(f"grid dims must be >= 1, got {dims}")
        if not self.voxel_size > 0:
            raise ValueError("voxel_size must be positive")
        if not all(np.isfinite(origin)):
            raise ValueError("grid origin must be finite")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "voxel_size", float(self.voxel_size))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.dims

    @property
    def n_voxels(self) -> int:
        return int(np.prod(self.dims))

    @property
    def extent(self) -> np.ndarray:
        return np.asarray(self.dims, dtype=np.float64) * self.voxel_size

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.origin) + 0.5 * self.extent

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.asarray(self.origin, dtype=np.float64)
        return lo, lo + self.extent

    def voxel_centers(self) -> np.ndarray:
        """World coordinates of all voxel centers, shape ``(X, Y, Z, 3)``."""
        axes = [np.arange(d, dtype=np.float64) for d in self.dims]
        g = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return grid_to_world(self, g)

    def to_dict(self) -> dict:
        return {"origin": list(self.origin), "dims": list(self.dims), "voxel_size": self.voxel_size}

    @classmethod
    def from_dict(cls, data: dict) -> VoxelGrid:
        return cls(tuple(data["origin"]), tuple(data["dims"]), data["voxel_size"])


def grid_to_world(grid: VoxelGrid, g) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    return np.asarray(grid.origin) + (g + 0.5) * grid.voxel_size


def world_to_grid(grid: VoxelGrid, p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    return (p - np.asarray(grid.origin)) / grid.voxel_size - 0.5


@dataclass(eq=False)
class Volume:
    """Dense ``(X, Y, Z, C)`` field on a voxel grid."""

    grid: VoxelGrid
    data: np.ndarray
    channel_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 3:
            data = data[..., None]
        if data.shape[:3] != self.grid.dims:
            raise ValueError(f"data shape {data.shape} does not match grid dims {self.grid.dims}")
        if data.shape[3] < 1:
            raise ValueError("a volume needs at least one channel")
        self.data = data
        self.channel_names = list(self.channel_names)
        if self.channel_names and len(self.channel_names) != data.shape[3]:
            raise ValueError("channel_names length does not match channel count")

    @property
    def channels(self) -> int:
        return self.data.shape[3]

    def channel(self, c: int) -> np.ndarray:
        return self.data[..., c]

    @classmethod
    def zeros(cls, grid: VoxelGrid, channels: int, names=()) -> Volume:
        return cls(grid, np.zeros(grid.dims + (channels,)), list(names))


def random_cube_embedding(grid: VoxelGrid, sub_dims=(32, 32, 32), rng=None) -> VoxelGrid:
    """Place a ``sub_dims`` sub-cube at a uniformly random integer voxel offset
    inside ``grid``."""
    sub = tuple(int(d) for d in sub_dims)
    if any(s < 1 or s > d for s, d in zip(sub, grid.dims)):
        raise ValueError(f"sub_dims {sub} must lie within grid dims {grid.dims}")
    rng = np.random.default_rng(rng)
    offset = np.array([rng.integers(0, d - s, endpoint=True) for s, d in zip(sub, grid.dims)])
    origin = np.asarray(grid.origin) + offset * grid.voxel_size
    return VoxelGrid(tuple(origin), sub, grid.voxel_size)


def crop_volume(volume: Volume, sub_grid: VoxelGrid) -> Volume:
    """Slice the part of ``volume`` covered by an aligned sub-grid."""
    g = volume.grid
    offset = np.rint(world_to_grid(g, grid_to_world(sub_grid, np.zeros(3)))).astype(int)
    sl = tuple(slice(o, o + d) for o, d in zip(offset, sub_grid.dims))
    if any(o < 0 or o + d > n for o, d, n in zip(offset, sub_grid.dims, g.dims)):
        raise ValueError("sub-grid is not contained in the volume grid")
    return Volume(sub_grid, volume.data[sl].copy(), volume.channel_names)


def _check_turns(quarter_turns: int) -> int:
    k = int(quarter_turns)
    if k not in (0, 1, 2, 3):
        raise ValueError("quarter_turns must be in {0, 1, 2, 3}")
    return k


def rotate_volume(volume: Volume, quarter_turns: int, vector_triples=()) -> Volume:
    """Rotate by ``quarter_turns`` x 90 degrees counter-clockwise about +z,
    pivoting on the grid center.

    A voxel at ``(i, j, k)`` moves to ``(Q_x - 1 - j, i, k)`` for one turn.
    ``vector_triples`` lists the first channel index of every ``(x, y, z)``
    vector triple; their in-plane components are rotated as well:
    ``(vx, vy) -> (-vy, vx)``.
    """
    k = _check_turns(quarter_turns)
    qx, qy, _ = volume.grid.dims
    if k % 2 == 1 and qx != qy:
        raise ValueError("odd quarter turns need a square x/y footprint")
    data = np.rot90(volume.data, k=k, axes=(0, 1)).copy()
    for c in vector_triples:
        vx = data[..., c].copy()
        vy = data[..., c + 1].copy()
        for _ in range(k):
            vx, vy = -vy, vx
        data[..., c] = vx
        data[..., c + 1] = vy
    return Volume(volume.grid, data, volume.channel_names)


def rotate_points(points, grid: VoxelGrid, quarter_turns: int) -> np.ndarray:
    """Rotate world points about the vertical axis through the grid center."""
    k = _check_turns(quarter_turns)
    p = np.array(points, dtype=np.float64)
    c = grid.center
    x = p[..., 0] - c[0]
    y = p[..., 1] - c[1]
    for _ in range(k):
        x, y = -y, x
    p[..., 0] = x + c[0]
    p[..., 1] = y + c[1]
    return p


def rotate_skeletons(skeletons, grid: VoxelGrid, quarter_turns: int) -> list[Skeleton]:
    return [
        Skeleton(rotate_points(s.joints, grid, quarter_turns), s.confidences.copy())
        for s in skeletons
    ]


def save_volume(path, volume: Volume, extra: dict | None = None) -> None:
    header = {
        "origin": list(volume.grid.origin),
        "dims": list(volume.grid.dims),
        "voxel_size": volume.grid.voxel_size,
        "channels": volume.channels,
        "channel_names": volume.channel_names,
    }
    if extra:
        header.update(extra)
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = np.ascontiguousarray(volume.data, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(payload)


def read_volume_file(path) -> tuple[dict, np.ndarray]:
    """Raw reader returning ``(header, float32 array of shape (X, Y, Z, C))``."""
    raw = Path(path).read_bytes()
    if raw[:16] != MAGIC:
        raise ValueError(f"{path}: not a volume dump (bad magic)")
    (n,) = struct.unpack("<I", raw[16:20])
    header = json.loads(raw[20 : 20 + n].decode("utf-8"))
    shape = tuple(header["dims"]) + (int(header["channels"]),)
    body = raw[20 + n :]
    expected = int(np.prod(shape)) * 4
    if len(body) != expected:
        raise ValueError(f"{path}: payload has {len(body)} bytes, expected {expected}")
    data = np.frombuffer(body, dtype="<f4").reshape(shape)
    return header, data


def load_volume(path) -> Volume:
    header, data = read_volume_file(path)
    grid = VoxelGrid(tuple(header["origin"]), tuple(header["dims"]), header["voxel_size"])
    return Volume(grid, data.astype(np.float64), header.get("channel_names", []))
