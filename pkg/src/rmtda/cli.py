"""Command-line entry point: ``rmtda {synth-rms,gamma-sweep,tune,real-data}``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, replace

from .errors import ConfigError, RdaError
from .harness import (
    SUMMARY_COLUMNS,
    SWEEP_COLUMNS,
    TUNE_COLUMNS,
    DatasetSource,
    ExperimentConfig,
    load_config,
    parse_gamma_grid,
    run_gamma_sweep,
    run_real_data,
    run_rms_experiment,
    run_tuning,
    write_report,
)

__all__ = ["build_parser", "main"]


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="TOML experiment file")
    sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
    sp.add_argument("--out", help="output path; '-' or omitted writes to stdout")
    sp.add_argument("--format", choices=("csv", "json"))
    sp.add_argument("--classifier", choices=("rlda", "rqda", "both"))
    sp.add_argument("--gamma", help="value, 'a,b,c', 'log:lo:hi:count' or 'lin:lo:hi:count'")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--estimators", help="comma list from g,plugin,cv,b632,b632plus")
    sp.add_argument("--digits", help="label pair 'a,b' for dataset runs")
    sp.add_argument("--train", help="libsvm training pool (dataset runs)")
    sp.add_argument("--test", help="libsvm test file (dataset runs)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rmtda", description="Regularized discriminant analysis error experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("synth-rms", "bias/variance/RMS of error estimators on synthetic Gaussian data"),
        ("gamma-sweep", "average errors and estimates along a gamma grid"),
        ("tune", "G-estimate minimizer and two-stage gamma selection"),
        ("real-data", "RMS of error estimators on random subsets of a libsvm dataset"),
    ):
        _add_common(sub.add_parser(name, help=text, description=text))
    return parser


def _config(args: argparse.Namespace) -> ExperimentConfig:
    over: dict = {"seed": args.seed, "format": args.format, "trials": args.trials}
    if args.classifier:
        over["classifiers"] = ("rlda", "rqda") if args.classifier == "both" else (args.classifier,)
    if args.gamma:
        over["gamma_grid"] = parse_gamma_grid(args.gamma)
    if args.estimators:
        over["estimators"] = tuple(t.strip() for t in args.estimators.split(",") if t.strip())
    cfg = load_config(args.config, **over)
    labels = None
    if args.digits:
        labels = tuple(v.strip() for v in args.digits.split(","))
        if len(labels) != 2:
            raise ConfigError("--digits expects two labels, e.g. 5,2")
    if args.train:
        geo = DatasetSource(args.train, args.test, labels or ("5", "2"))
        if not cfg.synthetic:
            geo = replace(cfg.geometry, train=args.train, test=args.test or cfg.geometry.test,
                          labels=labels or cfg.geometry.labels)
        cfg = replace(cfg, geometry=geo)
    elif labels is not None:
        if cfg.synthetic:
            raise ConfigError("--digits needs a dataset (--train or a [dataset] config section)")
        cfg = replace(cfg, geometry=replace(cfg.geometry, labels=labels))
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        out = args.out or cfg.output or "-"
        if args.command in ("synth-rms", "real-data"):
            if args.command == "synth-rms" and not cfg.synthetic:
                raise ConfigError("synth-rms needs a synthetic geometry; use real-data for datasets")
            result = run_rms_experiment(cfg) if args.command == "synth-rms" else run_real_data(cfg)
            summary = [asdict(s) for s in result.summary]
            write_report(out, cfg, summary=summary, trials=result.trials, columns=SUMMARY_COLUMNS)
        elif args.command == "gamma-sweep":
            write_report(out, cfg, trials=run_gamma_sweep(cfg), columns=SWEEP_COLUMNS)
        else:
            write_report(out, cfg, trials=run_tuning(cfg), columns=TUNE_COLUMNS)
    except ConfigError as exc:
        print(f"rmtda: configuration error: {exc}", file=sys.stderr)
        return 2
    except RdaError as exc:
        print(f"rmtda: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
