import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from volpose3d.skeleton import PoseLayout, Skeleton
from volpose3d.targets import render_heatmaps, render_vectormaps
from volpose3d.volume import (
    Volume,
    VoxelGrid,
    crop_volume,
    grid_to_world,
    load_volume,
    random_cube_embedding,
    read_volume_file,
    rotate_skeletons,
    rotate_volume,
    save_volume,
    world_to_grid,
)


def test_defaults():
    g = VoxelGrid()
    assert g.dims == (64, 64, 32)
    assert g.voxel_size == 0.075


@pytest.mark.parametrize("kw", [{"dims": (0, 4, 4)}, {"voxel_size": 0.0}, {"voxel_size": -1.0}])
def test_invalid_grid(kw):
    with pytest.raises(ValueError):
        VoxelGrid(**kw)


def test_first_voxel_center():
    g = VoxelGrid((0, 0, 0), (4, 4, 4), 1.0)
    np.testing.assert_array_equal(grid_to_world(g, (0, 0, 0)), [0.5, 0.5, 0.5])
    np.testing.assert_array_equal(world_to_grid(g, (0.5, 0.5, 0.5)), [0, 0, 0])


def test_default_grid_center_arithmetic():
    g = VoxelGrid((-2.4, -2.4, 0.0), (64, 64, 32), 0.075)
    # -2.4 + 32 * 0.075 = 0, z: 0.5 * 0.075
    np.testing.assert_allclose(grid_to_world(g, (31.5, 31.5, 0)), [0.0, 0.0, 0.0375], atol=1e-12)
    np.testing.assert_allclose(world_to_grid(g, (0.0, 0.0, 0.0375)), [31.5, 31.5, 0.0], atol=1e-9)


def test_round_trip_random(rng):
    g = VoxelGrid((-2.4, -2.4, 0.0), (64, 64, 32), 0.075)
    pts = rng.uniform(-10, 80, size=(1000, 3))
    np.testing.assert_allclose(world_to_grid(g, grid_to_world(g, pts)), pts, atol=1e-9, rtol=0)


def test_embedding_full_size_is_identity(rng):
    g = VoxelGrid((-1, 2, 3), (8, 6, 4), 0.1)
    assert random_cube_embedding(g, g.dims, rng) == g


def test_embedding_ranges():
    g = VoxelGrid()
    for seed in range(200):
        sub = random_cube_embedding(g, (32, 32, 32), seed)
        off = np.rint((np.asarray(sub.origin) - g.origin) / g.voxel_size)
        assert off[2] == 0
        assert 0 <= off[0] <= 32 and 0 <= off[1] <= 32
        assert sub.voxel_size == g.voxel_size
        lo, hi = sub.bounds()
        glo, ghi = g.bounds()
        assert np.all(lo >= glo - 1e-9) and np.all(hi <= ghi + 1e-9)


def test_embedding_deterministic():
    g = VoxelGrid()
    assert random_cube_embedding(g, rng=7) == random_cube_embedding(g, rng=7)


def test_embedding_rejects_oversize():
    with pytest.raises(ValueError):
        random_cube_embedding(VoxelGrid(), (32, 32, 33), 0)


def test_embedding_offsets_uniform():
    g = VoxelGrid((0, 0, 0), (12, 10, 8), 1.0)
    rng = np.random.default_rng(99)
    offs = np.array([random_cube_embedding(g, (4, 4, 4), rng).origin for _ in range(10000)]).astype(int)
    for axis, n_cells in enumerate((9, 7, 5)):
        counts = np.bincount(offs[:, axis], minlength=n_cells)
        assert len(counts) == n_cells
        assert chisquare(counts).pvalue > 0.001


def test_crop_volume():
    g = VoxelGrid((0, 0, 0), (6, 6, 6), 1.0)
    data = np.arange(6**3, dtype=float).reshape(6, 6, 6)
    sub = VoxelGrid((2, 1, 0), (3, 3, 3), 1.0)
    np.testing.assert_array_equal(crop_volume(Volume(g, data), sub).data[..., 0], data[2:5, 1:4, 0:3])


def _vol(data):
    data = np.asarray(data, dtype=float)
    return Volume(VoxelGrid((0, 0, 0), data.shape[:3], 1.0), data)


def test_half_turn_twice_is_identity(rng):
    v = _vol(rng.normal(size=(5, 7, 3, 2)))
    assert np.array_equal(rotate_volume(rotate_volume(v, 2), 2).data, v.data)


def test_quarter_turn_four_times_is_identity(rng):
    v = _vol(rng.normal(size=(5, 5, 3, 6)))
    out = v
    for _ in range(4):
        out = rotate_volume(out, 1, vector_triples=[3])
    assert np.array_equal(out.data, v.data)


def test_single_voxel_quarter_turn_by_hand():
    # 3x3x1 grid, counter-clockwise about +z: (i, j) -> (2 - j, i)
    for i in range(3):
        for j in range(3):
            d = np.zeros((3, 3, 1))
            d[i, j, 0] = 1.0
            out = rotate_volume(_vol(d), 1).data[..., 0]
            assert out[2 - j, i, 0] == 1.0 and out.sum() == 1.0


def test_vector_channel_rotates():
    d = np.zeros((3, 3, 1, 3))
    d[0, 1, 0] = (1.0, 0.0, 0.0)
    out = rotate_volume(_vol(d), 1, vector_triples=[0]).data
    np.testing.assert_array_equal(out[1, 0, 0], [0.0, 1.0, 0.0])


def test_odd_turn_needs_square_footprint():
    with pytest.raises(ValueError):
        rotate_volume(_vol(np.zeros((4, 5, 2))), 1)
    rotate_volume(_vol(np.zeros((4, 5, 2))), 2)


def test_skeleton_at_center_fixed():
    g = VoxelGrid((-1, -1, 0), (8, 8, 4), 0.25)
    s = Skeleton(np.array([[0.0, 0.0, 0.3]]))
    for k in (1, 2, 3):
        np.testing.assert_allclose(rotate_skeletons([s], g, k)[0].joints, s.joints, atol=1e-15)


def test_skeleton_half_turn_twice(rng):
    g = VoxelGrid((-1, -1, 0), (8, 8, 4), 0.25)
    s = Skeleton(rng.uniform(-1, 1, size=(14, 3)))
    back = rotate_skeletons(rotate_skeletons([s], g, 2), g, 2)[0]
    np.testing.assert_allclose(back.joints, s.joints, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), k=st.sampled_from([1, 2, 3]))
def test_rotation_commutes_with_rendering(seed, k):
    layout = PoseLayout.cmu14()
    rng = np.random.default_rng(seed)
    g = VoxelGrid((-0.9, -0.9, 0.0), (24, 24, 12), 0.075)
    people = [Skeleton(rng.uniform([-0.8, -0.8, 0.05], [0.8, 0.8, 0.85], size=(14, 3))) for _ in range(2)]
    a = rotate_volume(render_heatmaps(people, g), k).data
    b = render_heatmaps(rotate_skeletons(people, g, k), g).data
    assert np.abs(a - b).max() <= 1e-6
    vm = render_vectormaps(people, g, layout)
    a = rotate_volume(vm, k, vector_triples=range(0, vm.channels, 3)).data
    b = render_vectormaps(rotate_skeletons(people, g, k), g, layout).data
    # voxels sitting exactly on a tube wall may flip under rounding
    assert np.mean(np.abs(a - b).max(axis=-1) > 1e-6) < 1e-3


def test_dump_round_trip(tmp_path, rng):
    g = VoxelGrid((-1.5, 0.25, 2.0), (5, 4, 3), 0.1)
    v = Volume(g, rng.normal(size=(5, 4, 3, 2)).astype(np.float32).astype(float), ["a", "b"])
    path = tmp_path / "v.vox"
    save_volume(path, v)
    raw = path.read_bytes()
    assert raw[:8] == b"VOXVOL01" and len(raw[:16]) == 16
    back = load_volume(path)
    assert back.grid == g and back.channel_names == ["a", "b"]
    np.testing.assert_array_equal(back.data, v.data)


def test_dump_layout_is_x_major(tmp_path):
    g = VoxelGrid((0, 0, 0), (2, 3, 4), 1.0)
    data = np.arange(2 * 3 * 4 * 2, dtype=float).reshape(2, 3, 4, 2)
    path = tmp_path / "v.vox"
    save_volume(path, Volume(g, data))
    header, arr = read_volume_file(path)
    flat = np.frombuffer(path.read_bytes()[-arr.nbytes:], dtype="<f4")
    # element (x, y, z, c) at ((x * Y + y) * Z + z) * C + c
    assert flat[((1 * 3 + 2) * 4 + 3) * 2 + 1] == data[1, 2, 3, 1]
    assert header["channels"] == 2


def test_dump_bad_magic(tmp_path):
    path = tmp_path / "x.vox"
    path.write_bytes(b"NOTAVOLUME" + b"\0" * 30)
    with pytest.raises(ValueError, match="magic"):
        load_volume(path)
