import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from volpose3d.geometry import Camera, look_at
from volpose3d.skeleton import PoseLayout
from volpose3d.volume import VoxelGrid


@pytest.fixture
def layout():
    return PoseLayout.cmu14()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_camera(rng, target=(0.0, 0.0, 0.0), distance=(3.0, 6.0), size=(640, 480)):
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    pos = np.asarray(target) + direction * rng.uniform(*distance)
    R, t = look_at(pos, target, up=(0.0, 0.0, 1.0) if abs(direction[2]) < 0.95 else (1.0, 0.0, 0.0))
    f = rng.uniform(300, 800)
    w, h = size
    return Camera(f, f * rng.uniform(0.9, 1.1), w / 2 + rng.uniform(-20, 20), h / 2 + rng.uniform(-20, 20), w, h, R, t)


@pytest.fixture
def small_grid():
    return VoxelGrid((-0.6, -0.6, -0.6), (16, 16, 16), 0.075)
