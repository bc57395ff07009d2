"""Localization error of integer argmax versus refined peaks on random
sub-voxel Gaussians, swept over the refinement radius."""

import argparse

import numpy as np

from volpose3d.peaks import detect
from volpose3d.skeleton import Skeleton
from volpose3d.targets import render_heatmaps
from volpose3d.volume import VoxelGrid, grid_to_world


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--sigma", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    grid = VoxelGrid((0, 0, 0), (15, 15, 15), 1.0)
    rng = np.random.default_rng(args.seed)
    centers = 7.0 + rng.uniform(-0.5, 0.5, size=(args.trials, 3))
    vols = [render_heatmaps([Skeleton(grid_to_world(grid, c)[None])], grid, args.sigma).data[..., 0] for c in centers]

    print(f"{'radius':>6} | {'argmax':>8} | {'refined':>8} | ratio")
    for radius in (1, 2, 3):
        e_arg, e_ref = [], []
        for c, h in zip(centers, vols):
            (p,) = detect(h, radius=radius)
            e_arg.append(np.linalg.norm(np.array(p.index) - c))
            e_ref.append(np.linalg.norm(p.position - c))
        a, r = np.mean(e_arg), np.mean(e_ref)
        print(f"{radius:>6} | {a:>8.4f} | {r:>8.4f} | {r / a:.3f}")


if __name__ == "__main__":
    main()
