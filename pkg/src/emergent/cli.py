"""Command line: ``emergent run|validate|oracle <config>``.

Exit codes: 0 success, 1 invalid configuration, 2 runtime error.
Relative output paths are placed under ``$EMERGENT_OUT_DIR`` when set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import codec
from .complexity import minimal_description_oracle, reduce_redundant, selection_bits
from .errors import ConfigError, EmergentError, TooLarge
from .scenarios import load_config, run_scenario, write_outputs

OUT_DIR_ENV = "EMERGENT_OUT_DIR"
EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _out_path(explicit: str | None, configured: str | None, default: str) -> Path:
    p = Path(explicit or configured or default)
    if p.is_absolute():
        return p
    return Path(os.environ.get(OUT_DIR_ENV, ".")) / p


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(f"{args.config}: valid {cfg.kind} scenario {cfg.scenario!r}")
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    result = run_scenario(cfg, Path(args.config).parent)
    report = _out_path(args.out, cfg.outputs.report, f"{cfg.scenario}.report.json")
    trace = _out_path(args.trace, cfg.outputs.trace, f"{cfg.scenario}.trace.csv")
    plot = None
    if args.plot or cfg.outputs.plot:
        plot = _out_path(args.plot, cfg.outputs.plot, f"{cfg.scenario}.dat")
    write_outputs(result, report, trace, plot)
    n = result.report.get("summary", {}).get("event_count", 0)
    print(f"{cfg.scenario}: {n} event(s); report {report}; trace {trace}" + (f"; plot {plot}" if plot else ""))
    return EXIT_OK


def oracle_audit(result, block: int, param_bits: int = codec.DEFAULT_PARAM_BITS) -> dict:
    """Compare greedy reduction with the exhaustive oracle on consecutive blocks of frames."""
    trace, h = result.trace, result.hierarchy
    stats = {"blocks": 0, "compared": 0, "equal": 0, "greedy_above": 0, "skipped": 0,
             "greedy_below": 0, "max_excess_bits": 0}
    first = trace.start
    for lo in range(first, first + len(trace), block):
        seg = trace.segment(lo, lo + block - 1)
        stats["blocks"] += 1
        try:
            best = selection_bits(h, seg, minimal_description_oracle(h, seg, param_bits), param_bits)
        except TooLarge:
            stats["skipped"] += 1
            continue
        greedy = selection_bits(h, seg, reduce_redundant(h, seg, param_bits), param_bits)
        stats["compared"] += 1
        if greedy == best:
            stats["equal"] += 1
        elif greedy > best:
            stats["greedy_above"] += 1
            stats["max_excess_bits"] = max(stats["max_excess_bits"], greedy - best)
        else:
            stats["greedy_below"] += 1
    return stats


def _cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    if cfg.kind not in ("symbols", "trajectory", "periodic"):
        print(f"{args.config}: the oracle audit needs a temporal scenario, not {cfg.kind!r}", file=sys.stderr)
        return EXIT_INVALID
    result = run_scenario(cfg, Path(args.config).parent)
    stats = oracle_audit(result, args.block, cfg.codec.param_bits)
    print(json.dumps({"scenario": cfg.scenario, "block": args.block, **stats}, sort_keys=True))
    # a greedy description shorter than the exhaustive minimum would be a bug
    return EXIT_RUNTIME if stats["greedy_below"] else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emergent", description="Relative-complexity emergence scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write report, trace and plot data")
    run.add_argument("config")
    run.add_argument("--out", help="report JSON path")
    run.add_argument("--trace", help="trace CSV path")
    run.add_argument("--plot", help="gnuplot data path")
    run.set_defaults(func=_cmd_run)

    val = sub.add_parser("validate", help="check a configuration without running it")
    val.add_argument("config")
    val.set_defaults(func=_cmd_validate)

    orc = sub.add_parser("oracle", help="audit greedy reduction against the exhaustive oracle")
    orc.add_argument("config")
    orc.add_argument("--block", type=int, default=1, help="frames per audited block (default 1)")
    orc.set_defaults(func=_cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (EmergentError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
