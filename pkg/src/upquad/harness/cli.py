"""``upquad run | sweep | report``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .experiment import ConfigError, ExperimentConfig, run_experiment
from .pipeline import PipelineParseError


def _load(path: str, **overrides) -> ExperimentConfig:
    raw = json.loads(Path(path).read_text())
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(raw)


def _print_summary(result, stream=sys.stdout):
    stream.write(result.summary_csv())
    if result.slope is not None:
        flag = " (clipped)" if result.slope.clipped else ""
        stream.write(f"slope={result.slope.slope:.4f} stderr={result.slope.stderr:.4f}{flag}\n")
    stream.write("PASS\n" if result.passed else "FAIL\n")


def cmd_run(args) -> int:
    cfg = _load(args.config, output_dir=args.out)
    result = run_experiment(cfg, workers=args.workers)
    _print_summary(result)
    return 0 if result.passed else 1


def cmd_sweep(args) -> int:
    horizons = [int(h) for h in args.horizons.split(",")] if args.horizons else None
    seeds = list(range(args.seeds)) if args.seeds is not None else None
    cfg = _load(args.config, horizons=horizons, seeds=seeds, output_dir=args.out)
    result = run_experiment(cfg, workers=args.workers)
    _print_summary(result)
    return 0 if result.passed else 1


def cmd_report(args) -> int:
    paths = sorted(Path(args.dir).rglob("summary.csv"))
    if not paths:
        print(f"no summary.csv under {args.dir}", file=sys.stderr)
        return 1
    failed = False
    for path in paths:
        with path.open() as fh:
            rows = list(csv.DictReader(fh))
        print(f"== {path}")
        for r in rows:
            print(f"  {r['pipeline']:<32} T={r['T']:>6} alpha={float(r['alpha']):.4f} "
                  f"static={r['mean_static']:>12} slope={r['slope'] or '-':>8} {r['pass']}")
            failed |= r["pass"] == "fail"
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="upquad", description="online up-concave maximization harness")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="override output_dir")
    run.add_argument("--workers", type=int, default=1)
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="run a config over a horizon ladder and seed count")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--horizons", help="comma separated, e.g. 1024,4096,16384")
    sweep.add_argument("--seeds", type=int)
    sweep.add_argument("--out", help="override output_dir")
    sweep.add_argument("--workers", type=int, default=1)
    sweep.set_defaults(func=cmd_sweep)

    report = sub.add_parser("report", help="print every summary.csv below a directory")
    report.add_argument("--dir", required=True)
    report.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PipelineParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
