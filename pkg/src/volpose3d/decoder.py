"""Skeleton assembly from per-joint peaks and 3D part-affinity fields.

Candidate limbs are scored by a discretised line integral of the PAF along
the segment joining two peaks, matched greedily per limb type, and grown into
person hypotheses along the layout tree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .peaks import DEFAULT_RADIUS, DEFAULT_THRESHOLD, Peak
from .skeleton import PoseLayout, Skeleton
from .volume import Volume, VoxelGrid, grid_to_world


@dataclass(frozen=True)
class DecoderParams:
    n_samples: int = 10
    paf_threshold: float = 0.2
    min_joints: int = 8
    peak_radius: int = DEFAULT_RADIUS
    peak_threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")
        for name in ("paf_threshold", "peak_threshold"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.min_joints < 1:
            raise ValueError("min_joints must be >= 1")
        if self.peak_radius < 1:
            raise ValueError("peak_radius must be >= 1")


def trilinear(field: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Sample ``field (X, Y, Z, C)`` at grid coordinates ``pts (N, 3)``;
    voxels outside the grid read as zero."""
    pts = np.asarray(pts, dtype=np.float64).reshape(-1, 3)
    shape = np.array(field.shape[:3])
    base = np.floor(pts).astype(np.intp)
    frac = pts - base
    out = np.zeros((len(pts), field.shape[3]))
    for corner in np.ndindex(2, 2, 2):
        idx = base + corner
        w = np.prod(np.where(corner, frac, 1.0 - frac), axis=1)
        ok = np.all((idx >= 0) & (idx < shape), axis=1)
        out[ok] += w[ok, None] * field[idx[ok, 0], idx[ok, 1], idx[ok, 2]]
    return out


def paf_score(vmap: np.ndarray, a, b, n_samples: int = 10) -> float:
    """Mean of ``V(x_k) . d`` over ``n_samples`` points evenly spaced on
    ``[a, b]`` (endpoints included), ``d`` the unit direction ``a -> b``."""
    a = np.asarray(getattr(a, "position", a), dtype=np.float64)
    b = np.asarray(getattr(b, "position", b), dtype=np.float64)
    ab = b - a
    length = np.linalg.norm(ab)
    if length == 0:
        raise ValueError("paf_score needs distinct endpoints")
    d = ab / length
    t = np.linspace(0.0, 1.0, n_samples)
    samples = trilinear(vmap, a + t[:, None] * ab)
    return float(np.mean(samples @ d))


def greedy_match(scores: np.ndarray, threshold: float) -> list[tuple[int, int, float]]:
    """Greedy partial matching on a ``(n_parent, n_child)`` score matrix.

    Pairs below ``threshold`` are dropped, the rest visited by descending score
    (ties by ascending ``(parent, child)``) and accepted when both ends are free.
    """
    scores = np.asarray(scores, dtype=np.float64)
    cand = [
        (float(scores[i, j]), i, j)
        for i in range(scores.shape[0])
        for j in range(scores.shape[1])
        if scores[i, j] >= threshold
    ]
    cand.sort(key=lambda c: (-c[0], c[1], c[2]))
    used_p, used_c, out = set(), set(), []
    for s, i, j in cand:
        if i in used_p or j in used_c:
            continue
        used_p.add(i)
        used_c.add(j)
        out.append((i, j, s))
    return out


def score_matrix(peaks_parent, peaks_child, vmap: np.ndarray, n_samples: int = 10) -> np.ndarray:
    """``paf_score`` for every parent x child pair in one trilinear gather;
    coincident pairs get ``-inf``."""
    n, m = len(peaks_parent), len(peaks_child)
    scores = np.full((n, m), -np.inf)
    if n == 0 or m == 0:
        return scores
    a = np.array([p.position for p in peaks_parent], dtype=np.float64)[:, None, :]
    b = np.array([p.position for p in peaks_child], dtype=np.float64)[None, :, :]
    ab = b - a
    length = np.linalg.norm(ab, axis=-1)
    ok = length > 0
    d = np.divide(ab, length[..., None], out=np.zeros_like(ab), where=ok[..., None])
    t = np.linspace(0.0, 1.0, n_samples)
    pts = a[:, :, None, :] + t[:, None] * ab[:, :, None, :]
    samples = trilinear(vmap, pts.reshape(-1, 3)).reshape(n, m, n_samples, -1)
    mean = np.einsum("ijkc,ijc->ij", samples, d) / n_samples
    scores[ok] = mean[ok]
    return scores


def match_limb(peaks_parent, peaks_child, vmap: np.ndarray, params: DecoderParams = DecoderParams()):
    scores = score_matrix(peaks_parent, peaks_child, vmap, params.n_samples)
    return greedy_match(scores, params.paf_threshold)


def assemble(
    peaks: list[list[Peak]],
    vectormaps: np.ndarray,
    layout: PoseLayout,
    grid: VoxelGrid,
    params: DecoderParams = DecoderParams(),
) -> list[Skeleton]:
    """Group peaks into skeletons.

    Parameters
    ----------
    peaks : per-joint lists of :class:`Peak` (layout joint order)
    vectormaps : ``(X, Y, Z, 3 * n_pafs)`` array or a Volume
    """
    vm = vectormaps.data if isinstance(vectormaps, Volume) else np.asarray(vectormaps)
    if len(peaks) != layout.n_joints:
        raise ValueError(f"expected {layout.n_joints} peak lists, got {len(peaks)}")
    if vm.shape[-1] != 3 * layout.n_pafs:
        raise ValueError("vectormap channel count does not match the layout")

    # each hypothesis maps joint index -> peak index
    hypotheses: list[dict[int, int]] = []
    owner: dict[tuple[int, int], int] = {}

    for s, (ja, jb) in enumerate(layout.paf_edges):
        field = vm[..., 3 * s : 3 * s + 3]
        for pi, ci, _ in match_limb(peaks[ja], peaks[jb], field, params):
            ha = owner.get((ja, pi))
            hb = owner.get((jb, ci))
            if ha is None and hb is None:
                hypotheses.append({ja: pi, jb: ci})
                owner[(ja, pi)] = owner[(jb, ci)] = len(hypotheses) - 1
            elif hb is None:
                if jb not in hypotheses[ha]:
                    hypotheses[ha][jb] = ci
                    owner[(jb, ci)] = ha
            elif ha is None:
                if ja not in hypotheses[hb]:
                    hypotheses[hb][ja] = pi
                    owner[(ja, pi)] = hb
            elif ha != hb and not (hypotheses[ha].keys() & hypotheses[hb].keys()):
                for j, p in hypotheses[hb].items():
                    hypotheses[ha][j] = p
                    owner[(j, p)] = ha
                hypotheses[hb] = {}

    out = []
    for hyp in hypotheses:
        if len(hyp) < params.min_joints:
            continue
        joints = np.full((layout.n_joints, 3), np.nan)
        conf = np.zeros(layout.n_joints)
        for j, p in hyp.items():
            peak = peaks[j][p]
            joints[j] = grid_to_world(grid, peak.position)
            conf[j] = min(max(peak.score, 0.0), 1.0)
        out.append(Skeleton(joints, conf))
    return out
