"""Command-line entry points: run, plot, audit, newton.

Exit codes: 0 success, 1 invariant violation (audit), 2 invalid config or
malformed input file, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .audit import AuditLog
from .config import ConfigError, load_config
from .environment import run_trials
from .io_csv import (
    read_aggregate_csv,
    write_aggregate_csv,
    write_epoch_csv,
    write_invariant_csv,
    write_manifest,
    write_trace_csv,
)
from .linred import DesignError, SingularDesignError, newton_basis
from .posterior import SingularSystemError
from .runner import build_domain, build_kernel, run_single_trial
from .svgplot import render_regret_svg

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_NUMERIC_ERRORS = (SingularSystemError, DesignError, SingularDesignError, np.linalg.LinAlgError)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cgbandits", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="flat-key config file")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--trials", type=int, default=None, help="override trials")
        sp.add_argument("--seed", type=int, default=None, help="override seed")

    common(sub.add_parser("run", help="run an experiment, write trace/aggregate CSVs"))
    common(sub.add_parser("audit", help="run with invariant checks; nonzero exit on violation"))

    sp = sub.add_parser("plot", help="render aggregate CSVs as one SVG")
    sp.add_argument("csvs", nargs="+", help="aggregate CSV files (one series each)")
    sp.add_argument("--out", required=True, help="output SVG path")

    sp = sub.add_parser("newton", help="dump the greedy interpolation-basis construction")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", default=".", help="output directory")
    return p


def _load(args):
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.seed is not None:
        overrides["seed"] = args.seed
    return load_config(args.config, overrides)


def _cmd_run(args, audit_mode: bool) -> int:
    try:
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    algo = cfg.algo
    try:
        if audit_mode:
            audits = [AuditLog() for _ in range(cfg.trials)]
            results = [run_single_trial(cfg, i, audits[i]) for i in range(cfg.trials)]
            traces = [r.trace for r in results]
        else:
            exp = run_trials(cfg)
            results = exp.trials
            traces = exp.traces
    except _NUMERIC_ERRORS as exc:
        print(f"numerical failure in {algo} run: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    for trace in traces:
        write_trace_csv(out / f"trace_{algo}_trial{trace.trial}.csv", trace)
    cum = np.stack([tr.cum_regret for tr in traces])
    write_aggregate_csv(out / f"aggregate_{algo}.csv", cum.mean(axis=0), cum.std(axis=0))
    write_epoch_csv(out / f"epochs_{algo}.csv", traces)
    write_manifest(
        out / "manifest.json",
        cfg.as_dict(),
        [tr.seed for tr in traces],
        __version__,
    )

    if audit_mode:
        records = []
        for i, log in enumerate(audits):
            records.extend(log.records)
        write_invariant_csv(out / f"invariants_{algo}.csv", records)
        failures = [r for r in records if not r.passed]
        if failures:
            worst = failures[0]
            print(
                f"invariant violation: {worst.invariant} at epoch {worst.h} "
                f"(lhs={worst.lhs!r} > rhs={worst.rhs!r})",
                file=sys.stderr,
            )
            return EXIT_INVARIANT
        print(f"audit clean: {len(records)} checks passed")
    return EXIT_OK


def _cmd_plot(args) -> int:
    series = []
    for path in args.csvs:
        try:
            t, mean, std = read_aggregate_csv(path)
        except (ValueError, OSError) as exc:
            print(f"bad aggregate CSV: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        label = Path(path).stem
        series.append((label, t, mean, std))
    Path(args.out).write_text(render_regret_svg(series))
    return EXIT_OK


def _cmd_newton(args) -> int:
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        basis = newton_basis(build_kernel(cfg), build_domain(cfg), cfg["newton.e"])
    except _NUMERIC_ERRORS as exc:
        print(f"numerical failure in basis construction: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    path = out / "newton_trace.csv"
    with open(path, "w", newline="\n") as fh:
        fh.write("iter,center_index,p2max\n")
        for it, idx, p2 in basis.p2_history:
            fh.write(f"{it},{idx},{p2!r}\n")
    print(f"basis dimension {basis.dim} (admissible error {cfg['newton.e']}); wrote {path}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args, audit_mode=False)
    if args.command == "audit":
        return _cmd_run(args, audit_mode=True)
    if args.command == "plot":
        return _cmd_plot(args)
    return _cmd_newton(args)


if __name__ == "__main__":
    sys.exit(main())
