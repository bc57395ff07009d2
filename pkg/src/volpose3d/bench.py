"""Stage timing versus number of views and people.

Unprojection runs on the first ``m`` views of a synthetic rig. Detection and
decoding consume the volumetric output for the scene, which has the same
shape whatever the number of views, so their cost should not move with ``m``.
"""

from __future__ import annotations

import timeit
from contextlib import nullcontext
import numpy as np

from .config import PipelineConfig
from .decoder import assemble
from .peaks import detect_all
from .pipeline import gt_volumes, make_scene, volumetric_from_views

STAGES = ("unproject", "detect", "decode")


def _calibrate(fn, min_sample: float) -> int:
    """Loop count that makes one timing sample last at least ``min_sample`` s."""
    timer = timeit.Timer(fn)
    number = 1
    while timer.timeit(number) < min_sample:
        number *= 2
    return number


def _interleaved(fns: dict, keys, iterations: int, warmup: int, min_sample: float) -> dict:
    """Median seconds per call of ``fns[key]`` for every key.

    Rounds visit all keys back to back, in a fresh (seeded) order each time,
    so slow phases of the machine land on every key alike instead of on
    whichever key happened to be measured then.
    """
    keys = list(keys)
    order_rng = np.random.default_rng(0)
    numbers = {k: _calibrate(fns[k], min_sample) for k in keys}
    samples = {k: [] for k in keys}
    for r in range(warmup + iterations):
        for i in order_rng.permutation(len(keys)):
            k = keys[i]
            t = timeit.Timer(fns[k]).timeit(numbers[k]) / numbers[k]
            if r >= warmup:
                samples[k].append(t)
    return {k: float(np.median(v)) for k, v in samples.items()}


def linear_r2(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    return 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0


def relative_spread(values) -> float:
    """Largest deviation from the median, relative to the median."""
    v = np.asarray(values, dtype=np.float64)
    med = np.median(v)
    return float(np.abs(v - med).max() / med)


def _thread_limit(threads):
    if not threads:
        return nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return nullcontext()
    return threadpool_limits(limits=int(threads))


def run_benchmark(
    config: PipelineConfig | None = None,
    views=range(1, 11),
    people=(1, 2, 5, 10),
    iterations: int = 5,
    warmup: int = 1,
    threads: int | None = None,
    min_sample: float = 0.1,
    post_iterations: int = 45,
) -> dict:
    """Median per-call time of every stage for every (people, views) pair.

    Unprojection is sampled ``iterations`` times per view count, one call per
    sample. Detection and decoding are cheap, so they take ``post_iterations``
    rounds of samples lasting at least ``min_sample`` seconds each: many short
    interleaved rounds keep a burst of machine load from owning the median of
    any single view count.
    """
    config = config or PipelineConfig()
    views = [int(m) for m in views]
    people = [int(n) for n in people]
    if iterations < 1 or post_iterations < 1 or not views or not people:
        raise ValueError("need at least one iteration, one view count and one people count")
    rows = []
    with _thread_limit(threads):
        for n in people:
            cfg = config
            scene = make_scene(cfg, n, max(views), cfg.seed)
            layout = scene.layout
            output = gt_volumes(scene.skeletons, layout, cfg)
            p = cfg.decoder
            peaks = detect_all(output.heatmaps, p.peak_radius, p.peak_threshold)

            def unproject_m(m):
                return lambda: volumetric_from_views(scene.views[:m], scene.cameras[:m], layout, cfg)

            t_unp = _interleaved({m: unproject_m(m) for m in views}, views, iterations, warmup, 0.0)
            # detection and decoding never see the views: same call for every m.
            # Each stage gets its own pass so a decode sample never inherits
            # the allocator state left behind by a detect call.
            detect_fn = lambda: detect_all(output.heatmaps, p.peak_radius, p.peak_threshold)
            decode_fn = lambda: assemble(peaks, output.vectormaps, layout, cfg.grid, p)
            t_post = {}
            for stage, fn in (("detect", detect_fn), ("decode", decode_fn)):
                fns = {(stage, m): fn for m in views}
                t_post.update(_interleaved(fns, fns.keys(), post_iterations, warmup, min_sample))
            for m in views:
                rows.append(
                    {
                        "n_people": n,
                        "n_views": m,
                        "unproject_s": t_unp[m],
                        "detect_s": t_post[("detect", m)],
                        "decode_s": t_post[("decode", m)],
                    }
                )
    summary = {}
    for n in people:
        sub = [r for r in rows if r["n_people"] == n]
        ms = [r["n_views"] for r in sub]
        summary[str(n)] = {
            "unproject_r2": linear_r2(ms, [r["unproject_s"] for r in sub]) if len(sub) > 1 else 1.0,
            "decode_spread": relative_spread([r["decode_s"] for r in sub]),
            "detect_spread": relative_spread([r["detect_s"] for r in sub]),
        }
    return {
        "iterations": iterations,
        "post_iterations": post_iterations,
        "warmup": warmup,
        "threads": threads,
        "grid": config.grid.to_dict(),
        "stages": list(STAGES),
        "results": rows,
        "summary": summary,
    }


REPORT_SCHEMA = {
    "type": "object",
    "required": ["iterations", "warmup", "grid", "stages", "results", "summary"],
    "properties": {
        "iterations": {"type": "integer", "minimum": 1},
        "post_iterations": {"type": "integer", "minimum": 1},
        "warmup": {"type": "integer", "minimum": 0},
        "stages": {"type": "array", "items": {"enum": list(STAGES)}},
        "results": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["n_people", "n_views", "unproject_s", "detect_s", "decode_s"],
                "properties": {
                    "n_people": {"type": "integer", "minimum": 0},
                    "n_views": {"type": "integer", "minimum": 1},
                    "unproject_s": {"type": "number", "minimum": 0},
                    "detect_s": {"type": "number", "minimum": 0},
                    "decode_s": {"type": "number", "minimum": 0},
                },
            },
        },
        "summary": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["unproject_r2", "decode_spread", "detect_spread"],
            },
        },
    },
}
