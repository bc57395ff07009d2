"""Synthetic scenes: template skeletons, ring camera rigs and ideal per-view
joint-likelihood maps that stand in for a trained 2D backbone."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from .geometry import Camera, look_at
from .skeleton import CMU14_JOINTS, PoseLayout, Skeleton
from .unproject import FeatureMap2D, image_to_feature

# standing template (meters), person facing +y, feet on z = 0
_TEMPLATE = {
    "neck": (0.0, 0.0, 1.50),
    "nose": (0.0, 0.10, 1.62),
    "lshoulder": (0.18, 0.0, 1.45),
    "lelbow": (0.22, 0.0, 1.17),
    "lwrist": (0.24, 0.04, 0.92),
    "lhip": (0.10, 0.0, 0.95),
    "lknee": (0.10, 0.02, 0.52),
    "lankle": (0.10, 0.0, 0.08),
}
for _name in ("shoulder", "elbow", "wrist", "hip", "knee", "ankle"):
    _x, _y, _z = _TEMPLATE["l" + _name]
    _TEMPLATE["r" + _name] = (-_x, _y, _z)
TEMPLATE = np.array([_TEMPLATE[n] for n in CMU14_JOINTS])

IMAGE_SIZE = (1920, 1080)
DEFAULT_BOUNDS = ((-2.5, -2.5, 0.0), (2.5, 2.5, 2.5))


class SceneError(RuntimeError):
    pass


@dataclass(frozen=True)
class SceneSpec:
    n_people: int = 1
    bounds: tuple = DEFAULT_BOUNDS
    min_separation: float = 0.6
    seed: int = 0
    max_jitter_deg: float = 15.0
    max_attempts: int = 1000

    def __post_init__(self):
        if self.n_people < 0:
            raise ValueError("n_people must be >= 0")
        lo, hi = (np.asarray(b, dtype=np.float64) for b in self.bounds)
        if lo.shape != (3,) or hi.shape != (3,) or np.any(hi <= lo):
            raise ValueError("bounds must be ((x0, y0, z0), (x1, y1, z1)) with positive extent")
        object.__setattr__(self, "bounds", (tuple(lo.tolist()), tuple(hi.tolist())))


def _random_rotation(rng: np.random.Generator, max_angle: float) -> np.ndarray:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return Rotation.from_rotvec(axis * rng.uniform(0.0, max_angle)).as_matrix()


def jitter_pose(template: np.ndarray, layout: PoseLayout, rng, max_deg: float) -> np.ndarray:
    """Rotate every limb by at most ``max_deg`` while keeping limb lengths."""
    out = template.copy()
    max_angle = np.deg2rad(max_deg)
    for a, b in layout.paf_edges:
        out[b] = out[a] + _random_rotation(rng, max_angle) @ (template[b] - template[a])
    return out


def _root(joints: np.ndarray, layout: PoseLayout) -> np.ndarray:
    return 0.5 * (joints[layout.index("lhip")] + joints[layout.index("rhip")])


def generate_scene(spec: SceneSpec, layout: PoseLayout | None = None) -> list[Skeleton]:
    """``spec.n_people`` template skeletons placed inside ``spec.bounds`` with
    pairwise hip-center distance of at least ``spec.min_separation``."""
    layout = layout or PoseLayout.cmu14()
    if layout.joint_names != CMU14_JOINTS:
        raise ValueError("the template skeleton is defined for the CMU14 layout only")
    rng = np.random.default_rng(spec.seed)
    lo, hi = (np.asarray(b) for b in spec.bounds)
    people: list[np.ndarray] = []
    for _ in range(spec.n_people):
        for _attempt in range(spec.max_attempts):
            pose = jitter_pose(TEMPLATE, layout, rng, spec.max_jitter_deg)
            yaw = Rotation.from_euler("z", rng.uniform(0.0, 2 * np.pi)).as_matrix()
            pose = pose @ yaw.T
            offset = np.array([rng.uniform(lo[0], hi[0]), rng.uniform(lo[1], hi[1]), lo[2]])
            pose = pose - np.array([*_root(pose, layout)[:2], 0.0]) + offset
            if np.any(pose < lo) or np.any(pose > hi):
                continue
            root = _root(pose, layout)
            if all(np.linalg.norm(root - _root(q, layout)) >= spec.min_separation for q in people):
                people.append(pose)
                break
        else:
            raise SceneError(
                f"could not place person {len(people)} within {spec.max_attempts} attempts"
            )
    return [Skeleton(p, np.ones(len(p))) for p in people]


def generate_camera_rig(n_cams: int, bounds=DEFAULT_BOUNDS, seed: int = 0, image_size=IMAGE_SIZE, margin: float = 0.95) -> list[Camera]:
    """Cameras on a horizontal circle around ``bounds``, all aimed at its center.

    The ring radius is 1.3x the bounds half-diagonal. A shared focal length is
    chosen per camera so that every bounds corner lands inside the frame.
    """
    if n_cams < 1:
        raise ValueError("n_cams must be >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = (np.asarray(b, dtype=np.float64) for b in bounds)
    center = 0.5 * (lo + hi)
    radius = 1.3 * 0.5 * np.linalg.norm(hi - lo)
    corners = np.array([[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
    w, h = image_size
    cams = []
    for i in range(n_cams):
        angle = 2 * np.pi * (i + 0.125) / n_cams + rng.uniform(-0.1, 0.1)
        height = hi[2] + rng.uniform(-0.3, 0.3)
        pos = np.array([center[0] + radius * np.cos(angle), center[1] + radius * np.sin(angle), height])
        R, t = look_at(pos, center)
        pc = corners @ R.T + t
        xn = np.abs(pc[:, 0] / pc[:, 2]).max()
        yn = np.abs(pc[:, 1] / pc[:, 2]).max()
        f = min(margin * 0.5 * w / xn, margin * 0.5 * h / yn)
        cams.append(Camera(f, f, 0.5 * w, 0.5 * h, w, h, R, t, id=f"cam{i:02d}"))
    return cams


def feature_map_size(camera: Camera, stride: float) -> tuple[int, int]:
    return int(np.ceil(camera.width / stride)), int(np.ceil(camera.height / stride))


def _capsule_mask(px, py, a, b, radius):
    ab = b - a
    denom = float(ab @ ab)
    rx, ry = px - a[0], py - a[1]
    t = np.clip((rx * ab[0] + ry * ab[1]) / denom, 0.0, 1.0) if denom > 0 else np.zeros_like(px)
    dx = rx - t * ab[0]
    dy = ry - t * ab[1]
    return dx * dx + dy * dy <= radius * radius


def render_ideal_views(
    skeletons,
    cameras,
    map_width: int | None = None,
    map_height: int | None = None,
    stride: float = 16.0,
    sigma2d: float = 2.0,
    layout: PoseLayout | None = None,
    pafs: bool = False,
    paf_width: float = 1.5,
) -> list[FeatureMap2D]:
    """Ideal 2D maps per camera.

    Channel ``l`` holds the max over persons of a Gaussian (std ``sigma2d``
    feature pixels) at the projection of joint ``l``. With ``pafs=True`` the
    maps additionally carry, for every layout limb, three channels holding the
    limb's world-frame unit direction inside a capsule of half-width
    ``paf_width`` around its projected segment (overlaps averaged), so that
    unprojection yields a volume laid out like a full network output.
    """
    if not sigma2d > 0:
        raise ValueError("sigma2d must be positive")
    layout = layout or PoseLayout.cmu14()
    skeletons = list(skeletons)
    nj = layout.n_joints
    names = layout.channel_names() if pafs else layout.channel_names()[:nj]
    maps = []
    for cam in cameras:
        w, h = feature_map_size(cam, stride)
        w = map_width or w
        h = map_height or h
        data = np.zeros((h, w, len(names)))
        py, px = np.mgrid[0:h, 0:w].astype(np.float64)
        proj = []
        for skel in skeletons:
            uv, valid = cam.project_points(skel.joints)
            proj.append((image_to_feature(uv, stride), valid & skel.present))
        for f, valid in proj:
            for j in np.flatnonzero(valid):
                g = np.exp(-((px - f[j, 0]) ** 2 + (py - f[j, 1]) ** 2) / (2 * sigma2d**2))
                np.maximum(data[..., j], g, out=data[..., j])
        if pafs:
            for s, (a, b) in enumerate(layout.paf_edges):
                acc = np.zeros((h, w, 3))
                count = np.zeros((h, w))
                for skel, (f, valid) in zip(skeletons, proj):
                    if not (valid[a] and valid[b]):
                        continue
                    d = skel.joints[b] - skel.joints[a]
                    n = np.linalg.norm(d)
                    if n == 0:
                        continue
                    mask = _capsule_mask(px, py, f[a], f[b], paf_width)
                    acc[mask] += d / n
                    count[mask] += 1
                hit = count > 0
                acc[hit] /= count[hit][:, None]
                data[..., nj + 3 * s : nj + 3 * s + 3] = acc
        maps.append(FeatureMap2D(data, stride, names))
    return maps
