"""``bregman-lab`` command line entry point."""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .config import KINDS, ConfigError, load_config
from .experiment import run_experiment
from .plotting import emit_plot


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bregman-lab",
                                description="Run Bregman-divergence experiments and probes.")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--config", nargs="+", required=True, metavar="FILE")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--jobs", type=int, default=1, metavar="N")
    p.add_argument("--plot", metavar="COLUMN", help="also write plot.svg of this column")
    return p


def run_one(kind: str, path: str, outdir: str, plot: str | None = None):
    """Run one config file; returns ``(exit_code, message)``."""
    try:
        cfg = load_config(path, kind)
        record = run_experiment(cfg, outdir)
        if plot is not None:
            svg = emit_plot(record, plot)
            with open(os.path.join(outdir, "plot.svg"), "w", encoding="utf-8") as fh:
                fh.write(svg)
    except ConfigError as exc:
        return 1, f"{path}: invalid config\n" + "\n".join(f"  {e}" for e in exc.errors)
    except (OSError, ValueError, KeyError, RuntimeError, ArithmeticError) as exc:
        return 1, f"{path}: {type(exc).__name__}: {exc}"
    msg = (f"{path}: {record.verdict} (predicted {record.predicted}) -> "
           f"{os.path.join(outdir, 'record.csv')}")
    return record.exit_code, msg


def _outdirs(paths, out):
    if len(paths) == 1:
        return [out]
    names = [os.path.splitext(os.path.basename(p))[0] for p in paths]
    if len(set(names)) != len(names):
        names = [f"{i:03d}_{n}" for i, n in enumerate(names)]
    return [os.path.join(out, n) for n in names]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("--jobs must be at least 1", file=sys.stderr)
        return 1
    outdirs = _outdirs(args.config, args.out)
    jobs = [(args.kind, p, d, args.plot) for p, d in zip(args.config, outdirs)]
    if args.jobs == 1 or len(jobs) == 1:
        results = [run_one(*j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_one, *zip(*jobs)))
    for code, msg in results:
        print(msg, file=sys.stderr if code == 1 else sys.stdout)
    codes = [c for c, _ in results]
    if 1 in codes:
        return 1
    return 2 if 2 in codes else 0


if __name__ == "__main__":
    sys.exit(main())
