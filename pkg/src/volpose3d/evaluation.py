"""MPJPE / PCP with linear-assignment association of predictions to ground truth."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .skeleton import PoseLayout, Skeleton

PCP_GROUPS = ("Head", "Torso", "Up Arm", "Lo Arm", "Up Leg", "Lo Leg")

# CMU14 limb -> PCP column; left and right sides are pooled
CMU14_PCP_LIMBS = {
    "Head": [("neck", "nose")],
    "Torso": [("neck", "lhip"), ("neck", "rhip")],
    "Up Arm": [("lshoulder", "lelbow"), ("rshoulder", "relbow")],
    "Lo Arm": [("lelbow", "lwrist"), ("relbow", "rwrist")],
    "Up Leg": [("lhip", "lknee"), ("rhip", "rknee")],
    "Lo Leg": [("lknee", "lankle"), ("rknee", "rankle")],
}


@dataclass
class EvalReport:
    mpjpe_cm: float
    pcp_per_limb: dict[str, float] = field(default_factory=dict)
    pcp_avg: float = 0.0
    matched_pairs: int = 0
    unmatched_predictions: int = 0
    unmatched_groundtruths: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        cols = list(self.pcp_per_limb) + ["Avg"]
        vals = [self.pcp_per_limb[c] for c in self.pcp_per_limb] + [self.pcp_avg]
        head = f"{'MPJPE (cm)':>10} | " + " | ".join(f"{c:>6}" for c in cols)
        row = f"{self.mpjpe_cm:>10.3f} | " + " | ".join(f"{v:>6.1f}" for v in vals)
        return "\n".join([head, "-" * len(head), row])


def pair_cost(pred: Skeleton, gt: Skeleton) -> float:
    """Mean joint distance over joints present in both; ``inf`` if none shared."""
    both = pred.present & gt.present
    if not both.any():
        return np.inf
    return float(np.linalg.norm(pred.joints[both] - gt.joints[both], axis=1).mean())


def match_skeletons(preds, gts) -> list[tuple[int, int]]:
    """Minimum-cost assignment of predictions to ground truths; pairs without
    shared joints are never matched."""
    preds, gts = list(preds), list(gts)
    if not preds or not gts:
        return []
    cost = np.array([[pair_cost(p, g) for g in gts] for p in preds])
    finite = np.isfinite(cost)
    if not finite.any():
        return []
    # forbidden pairs priced above any full finite assignment
    big = (cost[finite].max() + 1.0) * (min(cost.shape) + 1)
    rows, cols = linear_sum_assignment(np.where(finite, cost, big))
    return [(int(r), int(c)) for r, c in zip(rows, cols) if finite[r, c]]


def mpjpe(pairs) -> float:
    """Mean Euclidean joint error in centimeters over ``(pred, gt)`` skeleton
    pairs, skipping joints missing on either side."""
    errs = []
    for pred, gt in pairs:
        both = pred.present & gt.present
        # centimeters before the norm keeps round offsets exact
        errs.append(np.linalg.norm((pred.joints[both] - gt.joints[both]) * 100.0, axis=1))
    errs = np.concatenate(errs) if errs else np.empty(0)
    if errs.size == 0:
        raise ValueError("mpjpe needs at least one matched joint")
    return float(errs.mean())


def pcp_limbs(layout: PoseLayout) -> dict[str, list[tuple[int, int]]]:
    return {
        g: [(layout.index(a), layout.index(b)) for a, b in limbs]
        for g, limbs in CMU14_PCP_LIMBS.items()
    }


def pcp_counts(pairs, layout: PoseLayout, unmatched_gts=()) -> dict[str, tuple[int, int]]:
    """``group -> (correct, evaluated)``. Ground truths with no prediction are
    evaluated with every limb incorrect."""
    counts = {}
    pairs = list(pairs) + [(None, g) for g in unmatched_gts]
    for group, limbs in pcp_limbs(layout).items():
        correct = total = 0
        for pred, gt in pairs:
            for a, b in limbs:
                if not (gt.present[a] and gt.present[b]):
                    continue
                length = np.linalg.norm(gt.joints[a] - gt.joints[b])
                if length == 0:
                    continue
                total += 1
                if pred is None or not (pred.present[a] and pred.present[b]):
                    continue
                err = 0.5 * (
                    np.linalg.norm(pred.joints[a] - gt.joints[a])
                    + np.linalg.norm(pred.joints[b] - gt.joints[b])
                )
                correct += bool(err < 0.5 * length)
        counts[group] = (correct, total)
    return counts


def pcp(pairs, layout: PoseLayout, unmatched_gts=()) -> tuple[dict[str, float], float]:
    """Per-group percentages and their average (groups with nothing to
    evaluate are left out of the average)."""
    per = {}
    for group, (c, t) in pcp_counts(pairs, layout, unmatched_gts).items():
        per[group] = 100.0 * c / t if t else float("nan")
    valid = [v for v in per.values() if np.isfinite(v)]
    return per, float(np.mean(valid)) if valid else float("nan")


def evaluate_scene(preds, gts, layout: PoseLayout) -> EvalReport:
    return evaluate([(preds, gts)], layout)


def evaluate(scenes, layout: PoseLayout) -> EvalReport:
    """Aggregate over ``(preds, gts)`` scenes; matching is done per scene."""
    pairs, missed = [], []
    n_pred_unmatched = 0
    for preds, gts in scenes:
        preds, gts = list(preds), list(gts)
        m = match_skeletons(preds, gts)
        pairs += [(preds[i], gts[j]) for i, j in m]
        matched_gt = {j for _, j in m}
        missed += [g for j, g in enumerate(gts) if j not in matched_gt]
        n_pred_unmatched += len(preds) - len(m)
    try:
        err = mpjpe(pairs)
    except ValueError:
        err = float("nan")
    per, avg = pcp(pairs, layout, missed)
    return EvalReport(err, per, avg, len(pairs), n_pred_unmatched, len(missed))
