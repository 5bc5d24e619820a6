#!/usr/bin/env python3
"""Run every plan under plans/ and collect outputs under results/.

This is the full comparative study; on one core expect a couple of hours.
Pass --quick to shrink every plan to a 2-seed, reduced-epoch smoke version.
"""

import argparse
import pathlib
import sys

from kanbench.bench import load_plan, run_plan, write_plan_outputs

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(ROOT / "results"))
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--quick", action="store_true", help="2 seeds, 10x fewer epochs")
    ap.add_argument("--predictions", action="store_true")
    args = ap.parse_args()

    plan_files = sorted((ROOT / "plans").glob("*.toml"))
    if not plan_files:
        print("no plan files found", file=sys.stderr)
        return 1

    failed = 0
    for path in plan_files:
        plan = load_plan(path)
        if args.quick:
            plan.seeds = plan.seeds[:2]
            plan.epochs = [max(1, e // 10) for e in plan.epochs]
        out_dir = pathlib.Path(args.out) / path.stem
        print(f"== {path.stem}: {len(plan.functions)} functions, "
              f"{len(plan.seeds)} seeds -> {out_dir}")
        result = run_plan(plan, jobs=args.jobs, with_predictions=args.predictions)
        write_plan_outputs(result, out_dir)
        n_bad = sum(1 for r in result.records if r.failed)
        failed += n_bad
        print(f"   {len(result.records)} runs, {n_bad} failed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
