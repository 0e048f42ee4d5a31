"""Command line: ``dlma run|sweep|oracle|plot``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from dlma.harness.config import ConfigError, load_config, parse_pairs, with_overrides
from dlma.harness.output import OutputError, emit_csv, plot_csv
from dlma.harness.runner import MEAN, N_SEEDS, SUM, oracle_for, run, sweep


def _overrides(items) -> dict[str, str]:
    return parse_pairs("\n".join(items or []))


def _config(args):
    config = load_config(args.config)
    return with_overrides(config, _overrides(args.set)) if args.set else config


def _progress(total):
    def report(t):
        if t % 10_000 == 0 or t == total:
            print(f"  slot {t}/{total}", file=sys.stderr)

    return report


def cmd_run(args) -> int:
    config = _config(args)
    metrics = run(config, _progress(config.slots) if args.verbose else None)
    out = Path(args.out or Path(args.config).with_suffix(".csv").name)
    emit_csv(metrics, out)
    if args.svg:
        plot_csv(out, out.with_suffix(".svg"))
    if metrics.slots >= config.window:
        final = metrics.final_window()
        cells = " ".join(f"{v:.3f}" for v in final)
        print(f"final-window throughput per node: {cells}  sum {final.sum():.3f}")
    print(f"wrote {out}")
    return 0


def cmd_sweep(args) -> int:
    config = _config(args)
    if "=" not in args.vary:
        raise ConfigError("--vary", f"expected key=v1,v2,..., got {args.vary!r}")
    key, raw = args.vary.split("=", 1)
    sep = ";" if ";" in raw else ","
    values = [v.strip() for v in raw.split(sep) if v.strip()]
    seeds = range(args.seeds)

    def report(value, metrics):
        if args.verbose:
            print(f"  {key}={value} seed={metrics.config.seed} done", file=sys.stderr)

    rows = sweep(config, key, values, seeds, on_run=report)
    out = Path(args.out or Path(args.config).with_suffix(".sweep.csv").name)
    emit_csv(rows, out)
    for r in rows:
        if r.seed == MEAN and r.node_id == SUM:
            oracle = "n/a" if r.oracle_tp is None else f"{r.oracle_tp:.3f}"
            print(f"{key}={r.param}: achieved {r.achieved_tp:.3f}  oracle {oracle}")
    if args.svg:
        plot_csv(out, out.with_suffix(".svg"))
    print(f"wrote {out}")
    return 0


def cmd_oracle(args) -> int:
    config = _config(args)
    bench = oracle_for(config)
    if bench is None:
        print("no benchmark available for this scenario", file=sys.stderr)
        return 2
    print(f"method: {bench.method}")
    print(f"sum throughput: {bench.sum_throughput:.6f}")
    for i, x in enumerate(bench.per_node):
        kind = "legacy" if i < len(config.legacy) else "drl"
        print(f"node {i} ({kind}): {x:.6f}")
    if isinstance(bench.policy, np.ndarray):
        print("transmit probability per frame position: " + " ".join(f"{p:.3f}" for p in bench.policy))
    return 0


def cmd_plot(args) -> int:
    out = Path(args.out or Path(args.csv).with_suffix(".svg"))
    plot_csv(args.csv, out)
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dlma", description="DRL multiple-access simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario(p):
        p.add_argument("config", help="scenario file (key = value lines)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")

    p = sub.add_parser("run", help="simulate one scenario and write the per-slot CSV")
    scenario(p)
    p.add_argument("--out", help="CSV path (default: <config>.csv)")
    p.add_argument("--svg", action="store_true", help="also plot short-term throughput")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run seeds across parameter values, compare with the oracle")
    scenario(p)
    p.add_argument("--vary", required=True, metavar="KEY=LIST",
                   help="comma list, or ';' list when values contain commas")
    p.add_argument("--seeds", type=int, default=N_SEEDS)
    p.add_argument("--out", help="CSV path (default: <config>.sweep.csv)")
    p.add_argument("--svg", action="store_true")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="print the model-aware benchmark")
    scenario(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("plot", help="render a run or sweep CSV as SVG")
    p.add_argument("csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OutputError, ValueError) as exc:
        print(f"dlma: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
