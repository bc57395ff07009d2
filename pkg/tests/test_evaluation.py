import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_rotation
from oracles import best_assignment_bruteforce
from volpose3d.evaluation import (
    CMU14_PCP_LIMBS,
    EvalReport,
    evaluate,
    evaluate_scene,
    match_skeletons,
    mpjpe,
    pair_cost,
    pcp,
)
from volpose3d.skeleton import PoseLayout, Skeleton
from volpose3d.synth import SceneSpec, generate_scene


def _people(seed, n=3):
    return generate_scene(SceneSpec(n_people=n, seed=seed), PoseLayout.cmu14())


def _perturbed(people, rng, scale):
    return [Skeleton(p.joints + rng.normal(scale=scale, size=p.joints.shape)) for p in people]


def test_identical_lists(layout):
    gts = _people(0)
    assert match_skeletons(gts, gts) == [(0, 0), (1, 1), (2, 2)]
    r = evaluate_scene(gts, gts, layout)
    assert r.mpjpe_cm == 0.0 and r.pcp_avg == 100.0
    assert all(v == 100.0 for v in r.pcp_per_limb.values())
    assert list(r.pcp_per_limb) == ["Head", "Torso", "Up Arm", "Lo Arm", "Up Leg", "Lo Leg"]


def test_three_four_five():
    gt = _people(1, 1)[0]
    pred = Skeleton(gt.joints + np.array([0.03, 0.04, 0.0]))
    assert mpjpe([(pred, gt)]) == pytest.approx(5.0, abs=1e-9)


def test_mpjpe_against_loop(rng):
    gts = _people(2)
    preds = _perturbed(gts, rng, 0.05)
    preds[0].joints[3] = np.nan
    errs = []
    for p, g in zip(preds, gts):
        for j in range(14):
            if np.all(np.isfinite(p.joints[j])) and np.all(np.isfinite(g.joints[j])):
                errs.append(math.dist(p.joints[j], g.joints[j]))
    assert abs(mpjpe(list(zip(preds, gts))) - 100 * sum(errs) / len(errs)) <= 1e-9


def test_mpjpe_needs_joints():
    with pytest.raises(ValueError):
        mpjpe([])
    with pytest.raises(ValueError):
        mpjpe([(Skeleton.empty(14), _people(0, 1)[0])])


@pytest.mark.parametrize("seed", range(20))
def test_assignment_matches_bruteforce(seed):
    rng = np.random.default_rng(seed)
    n, m = rng.integers(1, 5, size=2)
    base = [Skeleton(rng.uniform(-1, 1, size=(14, 3))) for _ in range(max(n, m))]
    preds = _perturbed(base[:n], rng, 0.5)
    gts = [base[i] for i in rng.permutation(len(base))[:m]]
    got = match_skeletons(preds, gts)
    cost = np.array([[pair_cost(p, g) for g in gts] for p in preds])
    best, _ = best_assignment_bruteforce(cost)
    assert len(got) == min(n, m)
    assert sum(cost[i, j] for i, j in got) == pytest.approx(best, abs=1e-9)


def test_assignment_beats_identity(rng):
    gts = _people(3, 4)
    preds = _perturbed(gts, rng, 0.3)
    got = match_skeletons(preds, gts)
    cost = lambda pairs: sum(pair_cost(preds[i], gts[j]) for i, j in pairs)
    assert cost(got) <= cost([(i, i) for i in range(4)]) + 1e-12


def test_no_shared_joints_never_matched():
    a = Skeleton(np.array([[0.0, 0, 0], [np.nan] * 3]))
    b = Skeleton(np.array([[np.nan] * 3, [1.0, 0, 0]]))
    assert pair_cost(a, b) == math.inf
    assert match_skeletons([a], [b]) == []
    # mixed: the forbidden pair must not displace a finite one
    c = Skeleton(np.array([[0.1, 0, 0], [1.0, 0, 0]]))
    assert match_skeletons([a, c], [b]) == [(1, 0)]


def test_empty_predictions(layout):
    gts = _people(4, 2)
    assert match_skeletons([], gts) == []
    r = evaluate_scene([], gts, layout)
    assert math.isnan(r.mpjpe_cm)
    assert r.pcp_avg == 0.0 and r.unmatched_groundtruths == 2 and r.matched_pairs == 0


def test_extra_predictions_counted(layout):
    gts = _people(5, 2)
    r = evaluate_scene(gts + _people(99, 1), gts, layout)
    assert r.unmatched_predictions == 1 and r.matched_pairs == 2 and r.mpjpe_cm == 0.0


def test_pcp_boundary_is_strict(layout):
    gt = _people(6, 1)[0]
    a, b = layout.index("lelbow"), layout.index("lwrist")
    length = np.linalg.norm(gt.joints[a] - gt.joints[b])
    off = np.array([0.0, 0.0, 0.5 * length])
    pred = gt.copy()
    pred.joints[a] += off
    pred.joints[b] += off
    per, _ = pcp([(pred, gt)], layout)
    # the left lower arm fails exactly at the boundary, the right one passes
    assert per["Lo Arm"] == 50.0
    pred.joints[a] -= 1e-9 * off
    pred.joints[b] -= 1e-9 * off
    assert pcp([(pred, gt)], layout)[0]["Lo Arm"] == 100.0


def test_missing_pred_endpoint_is_incorrect(layout):
    gt = _people(7, 1)[0]
    pred = gt.copy()
    pred.joints[layout.index("nose")] = np.nan
    per, avg = pcp([(pred, gt)], layout)
    assert per["Head"] == 0.0
    assert avg == pytest.approx(500.0 / 6)


def _pcp_oracle(pairs, layout):
    out = {}
    for group, limbs in CMU14_PCP_LIMBS.items():
        ok = tot = 0
        for pred, gt in pairs:
            for a, b in limbs:
                ia, ib = layout.index(a), layout.index(b)
                tot += 1
                ea = math.dist(pred.joints[ia], gt.joints[ia])
                eb = math.dist(pred.joints[ib], gt.joints[ib])
                ok += (ea + eb) / 2 < 0.5 * math.dist(gt.joints[ia], gt.joints[ib])
        out[group] = 100.0 * ok / tot
    return out


@pytest.mark.parametrize("seed", range(5))
def test_pcp_against_oracle(layout, seed):
    rng = np.random.default_rng(seed)
    gts = _people(seed, 3)
    preds = _perturbed(gts, rng, 0.12)
    pairs = list(zip(preds, gts))
    per, avg = pcp(pairs, layout)
    assert per == _pcp_oracle(pairs, layout)
    assert avg == pytest.approx(np.mean(list(per.values())))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_rigid_motion_invariance(seed):
    layout = PoseLayout.cmu14()
    rng = np.random.default_rng(seed)
    gts = _people(seed % 50, 2)
    preds = _perturbed(gts, rng, 0.05)
    R, d = random_rotation(rng), rng.normal(size=3)
    move = lambda ss: [Skeleton(s.joints @ R.T + d) for s in ss]
    a = evaluate_scene(preds, gts, layout)
    b = evaluate_scene(move(preds), move(gts), layout)
    assert abs(a.mpjpe_cm - b.mpjpe_cm) <= 1e-9


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), scale=st.sampled_from([0.5, 2.0, 4.0, 0.25]))
def test_pcp_scale_invariance(seed, scale):
    # power-of-two scales keep every comparison bit-exact
    layout = PoseLayout.cmu14()
    rng = np.random.default_rng(seed)
    gts = _people(seed % 50, 2)
    preds = _perturbed(gts, rng, 0.1)
    sc = lambda ss: [Skeleton(s.joints * scale) for s in ss]
    assert pcp(list(zip(preds, gts)), layout) == pcp(list(zip(sc(preds), sc(gts))), layout)


def test_evaluate_aggregates_scenes(layout, rng):
    s1, s2 = _people(8, 2), _people(9, 1)
    p1, p2 = _perturbed(s1, rng, 0.02), _perturbed(s2, rng, 0.02)
    r = evaluate([(p1, s1), (p2, s2)], layout)
    assert r.matched_pairs == 3
    assert r.mpjpe_cm == pytest.approx(mpjpe(list(zip(p1, s1)) + list(zip(p2, s2))))


def test_report_table_and_dict():
    r = EvalReport(3.5, {"Head": 100.0, "Torso": 50.0}, 75.0, 2, 0, 1)
    t = r.table()
    assert "MPJPE (cm)" in t and "Head" in t and "Avg" in t and "75.0" in t
    assert r.to_dict()["unmatched_groundtruths"] == 1
