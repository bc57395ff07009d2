"""Stage timings versus number of views, per people count, as a table plus
optional JSON report (same content as ``volpose3d bench``)."""

import argparse
import json

from volpose3d.bench import run_benchmark
from volpose3d.config import PipelineConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-views", type=int, default=10)
    ap.add_argument("--people", type=lambda s: [int(x) for x in s.split(",")], default=[1, 2, 5, 10])
    ap.add_argument("--iterations", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--json", help="write the full report here")
    args = ap.parse_args()

    report = run_benchmark(
        PipelineConfig(), range(1, args.max_views + 1), args.people, args.iterations, threads=args.threads
    )
    print(f"{'people':>6} {'views':>5} | {'unproject ms':>12} {'detect ms':>10} {'decode ms':>10}")
    for r in report["results"]:
        print(f"{r['n_people']:>6} {r['n_views']:>5} | {1e3 * r['unproject_s']:>12.1f} "
              f"{1e3 * r['detect_s']:>10.2f} {1e3 * r['decode_s']:>10.2f}")
    print()
    for n, s in report["summary"].items():
        print(f"{n:>3} people: unproject R^2 {s['unproject_r2']:.4f}, "
              f"detect spread {100 * s['detect_spread']:.1f}%, decode spread {100 * s['decode_spread']:.1f}%")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2)


if __name__ == "__main__":
    main()
