"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import PipelineConfig
from .evaluation import evaluate
from .geometry import CalibrationError
from .peaks import detect
from .pipeline import gt_volumes, make_scene, read_scene, run_pipeline, write_scene
from .skeleton import LayoutError, PoseLayout, load_layout, load_skeletons, save_skeletons
from .synth import SceneError
from .volume import grid_to_world, load_volume, save_volume

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if getattr(args, "config", None) else PipelineConfig()
    if getattr(args, "seed", None) is not None:
        cfg = PipelineConfig.from_dict({**cfg.to_dict(), "seed": args.seed})
    return cfg


def _layout(args) -> PoseLayout:
    return load_layout(args.layout) if getattr(args, "layout", None) else PoseLayout.cmu14()


def _write_json(obj, path) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_synth(args) -> int:
    cfg = _load_config(args)
    n_cams = args.cams if args.cams is not None else cfg.synth.n_cams
    scene = make_scene(cfg, args.people, n_cams, cfg.seed, _layout(args))
    for path in write_scene(scene, args.out, cfg):
        print(path)
    return EXIT_OK


def cmd_run(args) -> int:
    scene = read_scene(args.input, _layout(args) if args.layout else None)
    cfg = PipelineConfig.load(args.config) if args.config else (
        PipelineConfig.load(Path(args.input) / "config.json")
        if (Path(args.input) / "config.json").exists()
        else PipelineConfig()
    )
    if args.gt_volumes:
        if args.gt:
            scene.skeletons = load_skeletons(args.gt, scene.layout)
        elif not (Path(args.input) / "skeletons.json").exists():
            raise UsageError("--gt-volumes needs ground-truth skeletons (skeletons.json or --gt)")
    elif not scene.views:
        raise ValueError(f"{args.input}: no views found")
    view_ids = args.views
    if view_ids is not None and any(not 0 <= i < len(scene.views) for i in view_ids):
        raise UsageError(f"--views indices must lie in [0, {len(scene.views) - 1}]")
    preds, output = run_pipeline(scene, cfg, use_gt_volumes=args.gt_volumes, view_ids=view_ids)
    save_skeletons(preds, scene.layout, args.out)
    if args.dump_volume:
        save_volume(args.dump_volume, output.stacked())
    print(f"{len(preds)} skeleton(s) -> {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    layout = _layout(args)
    preds = load_skeletons(args.pred, layout)
    gts = load_skeletons(args.gt, layout)
    report = evaluate([(preds, gts)], layout)
    if args.json:
        _write_json(report.to_dict(), args.json)
    if args.json != "-":
        print(report.table())
    return EXIT_OK


def cmd_render_gt(args) -> int:
    cfg = _load_config(args)
    layout = _layout(args)
    skeletons = load_skeletons(args.skeletons, layout)
    save_volume(args.out, gt_volumes(skeletons, layout, cfg).stacked())
    print(args.out)
    return EXIT_OK


def cmd_detect(args) -> int:
    cfg = _load_config(args)
    volume = load_volume(args.volume)
    radius = args.radius if args.radius is not None else cfg.decoder.peak_radius
    threshold = args.threshold if args.threshold is not None else cfg.decoder.peak_threshold
    channels = args.channels if args.channels is not None else range(volume.channels)
    out = []
    for c in channels:
        if not 0 <= c < volume.channels:
            raise UsageError(f"channel {c} out of range (volume has {volume.channels})")
        name = volume.channel_names[c] if volume.channel_names else str(c)
        for p in detect(volume.data[..., c], radius, threshold):
            out.append(
                {
                    "channel": int(c),
                    "name": name,
                    "index": list(p.index),
                    "position": [float(x) for x in p.position],
                    "world": [float(x) for x in grid_to_world(volume.grid, p.position)],
                    "score": p.score,
                }
            )
    _write_json(out, args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    from .bench import run_benchmark

    cfg = _load_config(args)
    report = run_benchmark(
        cfg,
        views=range(1, args.max_views + 1),
        people=args.people,
        iterations=args.iterations,
        warmup=args.warmup,
        post_iterations=args.post_iterations,
        threads=args.threads,
    )
    _write_json(report, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="volpose3d", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, seed=True):
        p.add_argument("--config", help="pipeline config JSON (defaults built in)")
        p.add_argument("--layout", help="pose layout JSON (default CMU14)")
        if seed:
            p.add_argument("--seed", type=int, default=None, help="overrides the config seed")

    p = sub.add_parser("synth", help="write a synthetic scene, rig and ideal views")
    common(p)
    p.add_argument("--people", type=int, default=1)
    p.add_argument("--cams", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="unproject -> detect -> assemble")
    common(p, seed=False)
    p.add_argument("--input", required=True, help="scene directory written by `synth`")
    p.add_argument("--out", required=True, help="predicted skeleton JSON")
    p.add_argument("--views", type=_int_list, default=None, help="comma-separated view indices")
    p.add_argument("--gt-volumes", action="store_true", help="decode volumes rendered from GT skeletons")
    p.add_argument("--gt", help="GT skeleton JSON for --gt-volumes (default: scene skeletons.json)")
    p.add_argument("--dump-volume", help="write the decoder's input volume here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="MPJPE / PCP of predictions against ground truth")
    p.add_argument("--layout", help="pose layout JSON (default CMU14)")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--json", help="write the report JSON here ('-' for stdout)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("render-gt", help="render GT heatmaps + vectormaps to a volume dump")
    common(p)
    p.add_argument("--skeletons", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render_gt)

    p = sub.add_parser("detect", help="sub-voxel peaks of a volume dump")
    common(p)
    p.add_argument("--volume", required=True)
    p.add_argument("--channels", type=_int_list, default=None)
    p.add_argument("--radius", type=int, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("bench", help="stage timings versus views and people")
    common(p)
    p.add_argument("--max-views", type=int, default=10)
    p.add_argument("--people", type=_int_list, default=[1, 2, 5, 10])
    p.add_argument("--iterations", type=int, default=5)
    p.add_argument("--post-iterations", type=int, default=45, help="timing rounds for detect and decode")
    p.add_argument("--warmup", type=int, default=1)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"volpose3d {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, KeyError, CalibrationError, LayoutError, SceneError) as exc:
        print(f"volpose3d {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
