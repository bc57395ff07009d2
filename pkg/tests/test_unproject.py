import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_camera
from oracles import bilinear_scalar, unproject_loop
from volpose3d.geometry import look_at, Camera
from volpose3d.unproject import FeatureMap2D, sample_bilinear, unproject
from volpose3d.volume import VoxelGrid


def test_texel_center_exact(rng):
    f = FeatureMap2D(rng.normal(size=(6, 8, 3)), stride=4.0)
    np.testing.assert_array_equal(sample_bilinear(f, (4.0 * 5, 4.0 * 2)), f.data[2, 5])


def test_horizontal_midpoint():
    data = np.zeros((3, 3, 2))
    data[1, 0] = (2.0, -1.0)
    data[1, 1] = (4.0, 3.0)
    f = FeatureMap2D(data, stride=16.0)
    np.testing.assert_allclose(sample_bilinear(f, (8.0, 16.0)), [3.0, 1.0])


def test_against_corner_weight_oracle(rng):
    f = FeatureMap2D(rng.normal(size=(7, 9, 4)), stride=16.0)
    pts = rng.uniform(-40, 180, size=(1000, 2))
    got = sample_bilinear(f, pts)
    expected = np.array([bilinear_scalar(f.data, 16.0, u, v) for u, v in pts])
    assert np.abs(got - expected).max() <= 1e-6


def test_outside_is_zero():
    f = FeatureMap2D(np.ones((4, 4, 1)), stride=1.0)
    for p in [(-1.0, 0.0), (0.0, -1.5), (4.0, 2.0), (2.0, 10.0), (np.nan, 1.0)]:
        assert sample_bilinear(f, p)[0] == 0.0
    # half a texel outside the border blends with the zero padding
    assert sample_bilinear(f, (-0.5, 1.0))[0] == pytest.approx(0.5)


def _facing_camera(w=64, h=64, f=40.0):
    R, t = look_at((0.0, -5.0, 0.0), (0.0, 0.0, 0.0))
    return Camera(f, f, w / 2, h / 2, w, h, R, t)


def _small_grid():
    return VoxelGrid((-0.3, -0.3, -0.3), (8, 8, 8), 0.075)


def test_constant_single_view():
    cam = _facing_camera()
    f = FeatureMap2D(np.full((64, 64, 2), 0.7), stride=1.0)
    vol = unproject([(f, cam)], _small_grid())
    np.testing.assert_allclose(vol.data, 0.7, atol=1e-12)


def test_two_constant_views_average():
    cam = _facing_camera()
    R, t = look_at((5.0, 0.0, 0.0), (0.0, 0.0, 0.0))
    cam2 = Camera(40.0, 40.0, 32, 32, 64, 64, R, t)
    a = FeatureMap2D(np.full((64, 64, 1), 1.0), stride=1.0)
    b = FeatureMap2D(np.full((64, 64, 1), 3.0), stride=1.0)
    vol = unproject([(a, cam), (b, cam2)], _small_grid())
    np.testing.assert_allclose(vol.data, 2.0, atol=1e-12)


def test_invisible_voxels_keep_divisor():
    # second camera looks away: contributes zero, divisor stays 2
    cam = _facing_camera()
    R, t = look_at((0.0, -5.0, 0.0), (0.0, -10.0, 0.0))
    away = Camera(40.0, 40.0, 32, 32, 64, 64, R, t)
    f = FeatureMap2D(np.full((64, 64, 1), 1.0), stride=1.0)
    vol = unproject([(f, cam), (f, away)], _small_grid())
    np.testing.assert_allclose(vol.data, 0.5, atol=1e-12)
    vol = unproject([(f, cam), (f, away)], _small_grid(), visibility_normalized=True)
    np.testing.assert_allclose(vol.data, 1.0, atol=1e-12)


def test_errors():
    f = FeatureMap2D(np.ones((4, 4, 2)))
    g = FeatureMap2D(np.ones((4, 4, 3)))
    cam = _facing_camera()
    with pytest.raises(ValueError):
        unproject([], _small_grid())
    with pytest.raises(ValueError, match="channel"):
        unproject([(f, cam), (g, cam)], _small_grid())


def _random_rig(rng, n=4, channels=3):
    views = []
    for _ in range(n):
        cam = random_camera(rng, distance=(2.0, 4.0), size=(320, 240))
        views.append((FeatureMap2D(rng.uniform(0, 1, size=(15, 20, channels)), stride=16.0), cam))
    return views


def test_matches_loop_oracle_small(rng):
    views = _random_rig(rng)
    g = VoxelGrid((-0.45, -0.45, -0.45), (12, 12, 12), 0.075)
    got = unproject(views, g).data
    assert np.abs(got - unproject_loop(views, g)).max() <= 1e-5


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_view_permutation_and_duplication(seed):
    rng = np.random.default_rng(seed)
    views = _random_rig(rng, n=int(rng.integers(1, 5)))
    g = VoxelGrid((-0.3, -0.3, -0.3), (8, 8, 8), 0.075)
    base = unproject(views, g).data
    perm = [views[i] for i in rng.permutation(len(views))]
    assert np.abs(unproject(perm, g).data - base).max() <= 1e-6
    assert np.abs(unproject(views + views, g).data - base).max() <= 1e-6


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6), alpha=st.floats(-3.0, 3.0))
def test_linearity(seed, alpha):
    rng = np.random.default_rng(seed)
    views = _random_rig(rng, n=3)
    g = VoxelGrid((-0.3, -0.3, -0.3), (8, 8, 8), 0.075)
    scaled = [(FeatureMap2D(alpha * f.data, f.stride), c) for f, c in views]
    np.testing.assert_allclose(unproject(scaled, g).data, alpha * unproject(views, g).data, atol=1e-9)


def test_finite_output(rng):
    views = _random_rig(rng)
    g = VoxelGrid((-3, -3, -3), (10, 10, 10), 0.6)  # grid includes points behind cameras
    assert np.all(np.isfinite(unproject(views, g).data))
