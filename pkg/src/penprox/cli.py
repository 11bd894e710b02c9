"""Command-line entry points: run experiments, check bounds, fit slopes."""

import argparse
import json
import sys

from . import bench


def _cmd_run(args):
    with open(args.config, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    summary = bench.run_experiment(
        config, args.out, paper_scale=args.paper_scale, timing=args.timing,
        seed=args.seed,
    )
    for label, entry in sorted(summary["solvers"].items()):
        line = "%-22s final_obj=%.9e feas=%.3e" % (
            label, entry["final_objective"], entry["final_feasibility"])
        if entry.get("slope_obj") is not None:
            line += " slope=%.3f" % entry["slope_obj"]
        print(line)
        for chk in entry.get("bound_checks", ()):
            print("  check %-3s %s worst_slack=%.3e" % (
                chk["theorem"], "PASS" if chk["passed"] else "FAIL",
                chk["worst_slack"]))
    print("summary written to %s" % args.out)
    return 0


def _cmd_check(args):
    cols = bench.read_trace_csv(args.trace)
    meta_path = args.meta or args.trace.rsplit(".", 1)[0] + ".meta.json"
    with open(meta_path, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    with open(args.oracle, "r", encoding="utf-8") as fh:
        oracle = json.load(fh)
    result = bench.check_bounds(cols["k"], cols["objective"],
                                cols["feasibility"], meta, oracle,
                                args.theorem)
    status = "PASS" if result.passed else "FAIL"
    print("%s %s: %d/%d iterates, worst slack %.3e %s" % (
        args.theorem, status, result.checked - result.violations,
        result.checked, result.worst_slack, result.note))
    return 0 if result.passed else 1


def _cmd_slope(args):
    cols = bench.read_trace_csv(args.trace)
    slope, npts, note = bench.rate_slope(
        cols["k"], cols["rel_obj_residual"], args.k_from, args.k_to)
    print("slope=%.6f over %d points%s" % (slope, npts,
                                           " (%s)" % note if note else ""))
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="penprox",
        description="Penalty-based first-order solvers and their benchmark "
                    "harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a benchmark/solver matrix")
    p_run.add_argument("--config", required=True, help="experiment JSON")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--paper-scale", action="store_true",
                       help="use the large published problem sizes")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    p_run.add_argument("--timing", action="store_true",
                       help="record wall-clock times in traces (breaks "
                            "byte-reproducibility)")
    p_run.set_defaults(fn=_cmd_run)

    p_chk = sub.add_parser("check", help="verify a guarantee on a trace")
    p_chk.add_argument("--trace", required=True)
    p_chk.add_argument("--oracle", required=True)
    p_chk.add_argument("--theorem", required=True,
                       choices=["t1", "t2", "t3", "c1"])
    p_chk.add_argument("--meta", default=None,
                       help="meta sidecar (default: <trace>.meta.json)")
    p_chk.set_defaults(fn=_cmd_check)

    p_sl = sub.add_parser("slope", help="fit an empirical rate on a trace")
    p_sl.add_argument("--trace", required=True)
    p_sl.add_argument("--from", dest="k_from", type=int, required=True)
    p_sl.add_argument("--to", dest="k_to", type=int, required=True)
    p_sl.set_defaults(fn=_cmd_slope)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
