"""Multi-view, multi-person volumetric 3D pose estimation without the neural
parts: projection, unprojection, ground-truth rendering, sub-voxel peak
detection, 3D part-affinity decoding, augmentation and evaluation."""

from .config import PipelineConfig, SynthConfig
from .decoder import DecoderParams, assemble, match_limb, paf_score
from .evaluation import EvalReport, evaluate, match_skeletons, mpjpe, pcp
from .geometry import Camera, load_calibration, project, save_calibration
from .peaks import Peak, detect, nms, refine_subvoxel
from .skeleton import PoseLayout, Skeleton
from .targets import VolumetricOutput, loss, render_heatmaps, render_vectormaps
from .unproject import FeatureMap2D, sample_bilinear, unproject
from .volume import (
    Volume,
    VoxelGrid,
    grid_to_world,
    random_cube_embedding,
    rotate_skeletons,
    rotate_volume,
    world_to_grid,
)

__version__ = "0.1.0"
