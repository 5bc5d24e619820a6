"""Command-line entry point: run plans, inspect the corpus, count parameters."""

from __future__ import annotations

import argparse
import sys

__all__ = ["main"]


def _cmd_run(args):
    from .csvio import write_plan_outputs
    from .plans import load_plan
    from .runner import run_plan

    plan = load_plan(args.plan, seeds_override=args.seeds)

    done = []

    def progress(rec):
        done.append(rec)
        status = "FAILED" if rec.failed else f"rmse={rec.final_rmse:.4g}"
        c = rec.config
        print(
            f"[{len(done)}] {c['function']} {c['net']} row{c['row']} {c['optimizer']}"
            f" seed={c['seed']} {status}",
            flush=True,
        )

    result = run_plan(plan, jobs=args.jobs, with_predictions=args.predictions, progress=progress)
    write_plan_outputs(result, args.out)
    n_failed = sum(1 for r in result.records if r.failed)
    print(f"{len(result.records)} runs ({n_failed} failed) -> {args.out}")
    return 1 if n_failed else 0


def _cmd_list_functions(_args):
    from ..corpus import FUNCTIONS

    print(f"{'id':5s} {'category':12s} {'domain':20s} formula")
    for fid, f in FUNCTIONS.items():
        print(f"{fid:5s} {f.category:12s} {str(list(f.domain)):20s} {f.formula}")
    print("kx:K  linear-slope [0, 1]               K*x (any finite slope K)")
    return 0


def _cmd_count_params(args):
    from ..models import build_kan, build_mlp, count_params
    from ..spline import SplineSpec

    widths = [int(w) for w in args.widths.split(",")]
    if args.net in ("mlp", "both"):
        print(f"MLP {widths}: {count_params(build_mlp(widths), 'trainable')}")
    if args.net in ("kan", "both"):
        kan = build_kan(widths, SplineSpec(grid=args.grid, degree=args.k))
        print(
            f"KAN {widths} grid={args.grid} k={args.k}: "
            f"{count_params(kan, 'table2')} counted, {count_params(kan, 'trainable')} trainable"
        )
    return 0


def _cmd_verify(_args):
    from .verify import run_verify

    return run_verify()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="kanbench", description="KAN vs MLP benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a plan TOML and write CSV outputs")
    p_run.add_argument("plan", help="path to plan .toml")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seeds", type=int, default=None, help="override: use seeds 0..N-1")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_run.add_argument("--predictions", action="store_true", help="also write predictions.csv")
    p_run.set_defaults(fn=_cmd_run)

    p_list = sub.add_parser("list-functions", help="print the benchmark corpus")
    p_list.set_defaults(fn=_cmd_list_functions)

    p_count = sub.add_parser("count-params", help="parameter counts for given widths")
    p_count.add_argument("--widths", required=True, help="comma-separated, e.g. 1,5,1")
    p_count.add_argument("--grid", type=int, default=3)
    p_count.add_argument("--k", type=int, default=3)
    p_count.add_argument("--net", choices=["kan", "mlp", "both"], default="both")
    p_count.set_defaults(fn=_cmd_count_params)

    p_verify = sub.add_parser("verify", help="run the fast invariant suite")
    p_verify.set_defaults(fn=_cmd_verify)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
