"""Pinhole cameras and world -> image projection.

Extrinsics follow the world -> camera convention ``pc = R @ p + t``.
Lens distortion is not modelled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

#: points with camera depth at or below this value (meters) are not projected
EPS_Z = 1e-6
_ORTHO_TOL = 1e-6


class CalibrationError(ValueError):
    """Raised for malformed calibration files or invalid camera parameters."""


@dataclass(frozen=True, eq=False)
class Camera:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    rotation: np.ndarray
    translation: np.ndarray
    id: str = field(default="cam")

    def __post_init__(self):
        R = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)
        self.validate()

    def validate(self) -> None:
        R = self.rotation
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(self.translation))):
            raise CalibrationError(f"camera {self.id!r}: non-finite extrinsics")
        if np.abs(R.T @ R - np.eye(3)).max() > _ORTHO_TOL:
            raise CalibrationError(f"camera {self.id!r}: rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > _ORTHO_TOL:
            raise CalibrationError(f"camera {self.id!r}: rotation determinant is not +1")
        if not (self.fx > 0 and self.fy > 0):
            raise CalibrationError(f"camera {self.id!r}: focal lengths must be positive")
        if int(self.width) <= 0 or int(self.height) <= 0:
            raise CalibrationError(f"camera {self.id!r}: image size must be positive")

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @property
    def center(self) -> np.ndarray:
        """Camera center in world coordinates."""
        return -self.rotation.T @ self.translation

    def to_camera(self, points: np.ndarray) -> np.ndarray:
        """World points ``(..., 3)`` to camera coordinates."""
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def project_points(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorised projection.

        Returns
        -------
        uv : ndarray, shape (..., 2)
            Pixel coordinates; rows for invalid points are NaN.
        valid : ndarray of bool, shape (...)
            True where the point lies strictly in front of the camera.
        """
        pc = self.to_camera(points)
        z = pc[..., 2]
        valid = z > EPS_Z
        safe_z = np.where(valid, z, 1.0)
        u = self.fx * pc[..., 0] / safe_z + self.cx
        v = self.fy * pc[..., 1] / safe_z + self.cy
        uv = np.stack([u, v], axis=-1)
        uv[~valid] = np.nan
        return uv, valid


def project(camera: Camera, p) -> np.ndarray | None:
    """Project one world point; ``None`` when it is at or behind the camera plane."""
    uv, valid = camera.project_points(np.asarray(p, dtype=np.float64).reshape(3))
    return uv if bool(valid) else None


def look_at(position, target, up=(0.0, 0.0, 1.0)) -> tuple[np.ndarray, np.ndarray]:
    """World -> camera rotation and translation for a camera at ``position``
    looking at ``target`` (x right, y down, z forward)."""
    position = np.asarray(position, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - position
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, np.asarray(up, dtype=np.float64))
    n = np.linalg.norm(right)
    if n < 1e-9:
        raise ValueError("viewing direction is parallel to the up vector")
    right /= n
    down = np.cross(forward, right)
    R = np.stack([right, down, forward])
    return R, -R @ position


def camera_to_dict(camera: Camera) -> dict:
    return {
        "id": camera.id,
        "width": int(camera.width),
        "height": int(camera.height),
        "K": [float(camera.fx), float(camera.fy), float(camera.cx), float(camera.cy)],
        "R": [float(x) for x in camera.rotation.reshape(-1)],
        "t": [float(x) for x in camera.translation],
    }


def camera_from_dict(entry: dict, index: int = 0) -> Camera:
    cam_id = str(entry.get("id", index))
    try:
        fx, fy, cx, cy = (float(x) for x in entry["K"])
        R = np.array(entry["R"], dtype=np.float64)
        t = np.array(entry["t"], dtype=np.float64)
        width, height = entry["width"], entry["height"]
    except (KeyError, TypeError, ValueError) as exc:
        raise CalibrationError(f"camera {cam_id!r}: malformed entry ({exc})") from exc
    if R.size != 9 or t.size != 3:
        raise CalibrationError(f"camera {cam_id!r}: R needs 9 values and t needs 3")
    if int(width) != width or int(height) != height:
        raise CalibrationError(f"camera {cam_id!r}: width/height must be integers")
    return Camera(fx, fy, cx, cy, int(width), int(height), R.reshape(3, 3), t, id=cam_id)


def save_calibration(cameras, path) -> None:
    data = [camera_to_dict(c) for c in cameras]
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def load_calibration(path) -> list[Camera]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CalibrationError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, list):
        raise CalibrationError(f"{path}: expected a JSON array of cameras")
    return [camera_from_dict(entry, i) for i, entry in enumerate(data)]
