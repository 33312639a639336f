"""Command-line entry points.

Subcommands: collect (training data), train (model bundle), run (assisted
or control experiment), report (group comparison), serve (real-time
cockpit bridge), benchmark (kernel backends).

Exit codes: 0 success, 2 usage error, 3 data or configuration error.
"""

import argparse
import os
import sys

from lcas import features, forest, harness, labeling, sim

_DATA_ERRORS = (harness.DataError, sim.ConfigError, features.LogFormatError,
                features.LogWriteError, labeling.MalformedLogError,
                forest.LayoutMismatchError, OSError)


def _resolve_scenario(value):
    """Accept a YAML path or the bare name of a packaged scenario."""
    if os.path.exists(value):
        return value
    packaged = os.path.join(os.path.dirname(__file__), "scenarios",
                            value.lower() + ".yaml")
    if os.path.exists(packaged):
        return packaged
    raise harness.DataError("scenario %r is neither a file nor a packaged "
                            "scenario name" % value)


def _add_run_args(p, duration):
    p.add_argument("--scenario", required=True,
                   help="scenario YAML path, or packaged name (s1, s2)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--duration", type=float, default=duration,
                   metavar="SECONDS")
    p.add_argument("--out", required=True, metavar="DIR")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lcas",
        description="Lane-change assistance testbed: closed-loop highway "
                    "simulation, intention model training, and the "
                    "assisted-vs-control experiment.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("collect", help="scripted unassisted run + labeling")
    _add_run_args(p, 1800.0)

    p = sub.add_parser("train", help="fit a model bundle from a labeled log")
    p.add_argument("--log", required=True, help="labeled.csv from collect")
    p.add_argument("--model", default="model.json", metavar="FILE",
                   help="output bundle path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--min-leaf", type=int, default=5)
    p.add_argument("--mtry", type=int, default=0,
                   help="features tried per split; 0 = sqrt of width")
    p.add_argument("--driver-id", default="")

    p = sub.add_parser("run", help="one assisted or control experiment run")
    _add_run_args(p, 300.0)
    p.add_argument("--model", default="", metavar="FILE")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--assisted", action="store_true")
    group.add_argument("--control", action="store_true")
    p.add_argument("--compliance", type=float, default=1.0,
                   help="probability the driver heeds a blocking warning")

    p = sub.add_parser("report", help="compare assisted vs control runs")
    p.add_argument("runs", nargs="+", metavar="RUN_DIR")
    p.add_argument("--out", required=True, metavar="DIR")

    p = sub.add_parser("serve", help="drive the ego live from the cockpit UI")
    _add_run_args(p, 600.0)
    p.add_argument("--model", default="", metavar="FILE",
                   help="enable the warning display with this bundle")
    p.add_argument("--port", type=int, default=8700)
    p.add_argument("--host", default="127.0.0.1")

    p = sub.add_parser("benchmark", help="time pure vs compiled kernels")
    p.add_argument("--rows", type=int, default=20000)
    p.add_argument("--trees", type=int, default=20)
    return parser


def cmd_collect(args):
    manifest = harness.RunManifest(
        scenario=_resolve_scenario(args.scenario), seed=args.seed,
        duration_s=args.duration, out_dir=args.out)
    harness.collect(manifest)
    return 0


def cmd_train(args):
    harness.train_model(args.log, args.model, seed=args.seed,
                        tree_count=args.trees, max_depth=args.depth,
                        min_leaf=args.min_leaf, mtry=args.mtry,
                        driver_id=args.driver_id)
    return 0


def cmd_run(args):
    manifest = harness.RunManifest(
        scenario=_resolve_scenario(args.scenario), seed=args.seed,
        duration_s=args.duration, out_dir=args.out,
        assisted=args.assisted, model=args.model,
        compliance=args.compliance if args.assisted else 0.0)
    result = harness.run_experiment(manifest)
    print("run complete: %d ticks, %d display events -> %s"
          % (result["ticks"], result["event_count"], args.out))
    return 0


def cmd_report(args):
    harness.report(args.runs, args.out)
    return 0


def cmd_serve(args):
    from lcas import bridge as bridge_mod
    manifest = harness.RunManifest(
        scenario=_resolve_scenario(args.scenario), seed=args.seed,
        duration_s=args.duration, out_dir=args.out,
        assisted=bool(args.model), model=args.model, ego_mode="control")
    server = bridge_mod.BridgeServer(host=args.host, port=args.port)
    server.start()
    print("cockpit bridge listening on ws://%s:%d (ctrl-c stops the run)"
          % (args.host, args.port))
    try:
        result = harness.run_experiment(manifest, bridge=server, pace=True)
    finally:
        server.close()
    print("session over: %d ticks logged -> %s" % (result["ticks"], args.out))
    return 0


def cmd_benchmark(args):
    from lcas import benchmark
    ok = benchmark.run(rows=args.rows, trees=args.trees)
    return 0 if ok else 3


_COMMANDS = {
    "collect": cmd_collect,
    "train": cmd_train,
    "run": cmd_run,
    "report": cmd_report,
    "serve": cmd_serve,
    "benchmark": cmd_benchmark,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _DATA_ERRORS as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
