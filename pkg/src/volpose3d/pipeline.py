"""End-to-end glue: synthetic scene I/O, unproject -> detect -> assemble."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .decoder import assemble
from .geometry import Camera, load_calibration, save_calibration
from .peaks import detect_all
from .skeleton import PoseLayout, Skeleton, load_layout, load_skeletons, save_skeletons
from .synth import SceneSpec, generate_camera_rig, generate_scene, render_ideal_views
from .targets import VolumetricOutput, render_targets
from .unproject import FeatureMap2D, unproject
from .volume import Volume, VoxelGrid, read_volume_file, save_volume

CALIBRATION_FILE = "calibration.json"
SKELETONS_FILE = "skeletons.json"
LAYOUT_FILE = "layout.json"
CONFIG_FILE = "config.json"
VIEWS_DIR = "views"


def save_feature_map(path, fmap: FeatureMap2D, camera_id: str = "") -> None:
    """Stored in the volume container as a ``(W, H, 1, C)`` block."""
    grid = VoxelGrid((0.0, 0.0, 0.0), (fmap.width, fmap.height, 1), 1.0)
    data = fmap.data.transpose(1, 0, 2)[:, :, None, :]
    extra = {"kind": "featuremap", "stride": fmap.stride, "camera_id": camera_id}
    save_volume(path, Volume(grid, data, list(fmap.channel_names)), extra)


def load_feature_map(path) -> tuple[FeatureMap2D, str]:
    header, data = read_volume_file(path)
    if header.get("kind") != "featuremap" or header["dims"][2] != 1:
        raise ValueError(f"{path}: not a feature-map dump")
    fmap = FeatureMap2D(
        data[:, :, 0, :].transpose(1, 0, 2).astype(np.float64),
        header["stride"],
        header.get("channel_names", ()),
    )
    return fmap, header.get("camera_id", "")


@dataclass
class Scene:
    cameras: list[Camera]
    views: list[FeatureMap2D]
    skeletons: list[Skeleton]
    layout: PoseLayout


def make_scene(config: PipelineConfig, n_people: int, n_cams: int, seed: int, layout: PoseLayout | None = None) -> Scene:
    layout = layout or PoseLayout.cmu14()
    sc = config.synth
    bounds = config.scene_bounds()
    spec = SceneSpec(n_people, bounds, sc.min_separation, seed)
    skeletons = generate_scene(spec, layout)
    cameras = generate_camera_rig(n_cams, bounds, seed, image_size=sc.image_size)
    views = render_ideal_views(
        skeletons, cameras, stride=sc.stride, sigma2d=sc.sigma2d, layout=layout, pafs=True, paf_width=sc.paf_width
    )
    return Scene(cameras, views, skeletons, layout)


def write_scene(scene: Scene, out_dir, config: PipelineConfig) -> list[Path]:
    out = Path(out_dir)
    (out / VIEWS_DIR).mkdir(parents=True, exist_ok=True)
    written = [out / CALIBRATION_FILE, out / SKELETONS_FILE, out / LAYOUT_FILE, out / CONFIG_FILE]
    save_calibration(scene.cameras, written[0])
    save_skeletons(scene.skeletons, scene.layout, written[1])
    written[2].write_text(json.dumps(scene.layout.to_dict(), indent=2) + "\n", encoding="utf-8")
    config.save(written[3])
    for i, (fmap, cam) in enumerate(zip(scene.views, scene.cameras)):
        path = out / VIEWS_DIR / f"view_{i:02d}.vox"
        save_feature_map(path, fmap, cam.id)
        written.append(path)
    return written


def read_scene(in_dir, layout: PoseLayout | None = None) -> Scene:
    d = Path(in_dir)
    if layout is None:
        layout = load_layout(d / LAYOUT_FILE) if (d / LAYOUT_FILE).exists() else PoseLayout.cmu14()
    cameras = load_calibration(d / CALIBRATION_FILE)
    by_id = {c.id: c for c in cameras}
    view_files = sorted((d / VIEWS_DIR).glob("*.vox"))
    views, cams = [], []
    for i, path in enumerate(view_files):
        fmap, cam_id = load_feature_map(path)
        cam = by_id.get(cam_id) or (cameras[i] if i < len(cameras) else None)
        if cam is None:
            raise ValueError(f"{path}: no calibration for camera {cam_id!r}")
        views.append(fmap)
        cams.append(cam)
    skel_path = d / SKELETONS_FILE
    skeletons = load_skeletons(skel_path, layout) if skel_path.exists() else []
    return Scene(cams, views, skeletons, layout)


def decode(output: VolumetricOutput, layout: PoseLayout, config: PipelineConfig) -> list[Skeleton]:
    p = config.decoder
    peaks = detect_all(output.heatmaps, p.peak_radius, p.peak_threshold)
    return assemble(peaks, output.vectormaps, layout, output.grid, p)


def volumetric_from_views(views, cameras, layout: PoseLayout, config: PipelineConfig) -> VolumetricOutput:
    vol = unproject(
        list(zip(views, cameras)),
        config.grid,
        visibility_normalized=config.visibility_normalized,
        channel_names=layout.channel_names(),
    )
    return VolumetricOutput.split(vol, layout)


def gt_volumes(skeletons, layout: PoseLayout, config: PipelineConfig) -> VolumetricOutput:
    return render_targets(skeletons, config.grid, layout, config.sigma, config.limb_radius)


def run_pipeline(scene: Scene, config: PipelineConfig, use_gt_volumes: bool = False, view_ids=None):
    """Returns ``(predicted skeletons, VolumetricOutput fed to the decoder)``."""
    if use_gt_volumes:
        output = gt_volumes(scene.skeletons, scene.layout, config)
    else:
        idx = range(len(scene.views)) if view_ids is None else list(view_ids)
        views = [scene.views[i] for i in idx]
        cams = [scene.cameras[i] for i in idx]
        output = volumetric_from_views(views, cams, scene.layout, config)
    return decode(output, scene.layout, config), output
