"""Command line front end.

Exit codes: 0 on success, 2 for configuration problems (including bad
usage), 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .datagen import density_bounds, mean_abs
from .harness import (
    KINDS,
    PRESETS,
    ConfigError,
    load_config,
    load_raw,
    preset,
    run_experiment,
    run_sweep,
)
from .schedules import BATCH, INFINITE_STORAGE, batch_boundary_radius, switch_radius


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oqr",
        description="Online quantile regression experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment and emit its files")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="path to a JSON experiment config")
    src.add_argument(
        "--preset",
        help="named preset; one of: " + ", ".join(sorted(PRESETS)),
    )
    run.add_argument(
        "--kind",
        help="experiment kind (required with --config); one of: " + ", ".join(sorted(KINDS)),
    )
    run.add_argument(
        "--figures",
        action="store_true",
        help="also render the report figures next to the outputs",
    )

    oracle = sub.add_parser(
        "oracle", help="print the analytic constants for a config as JSON"
    )
    oracle.add_argument("--config", required=True, help="path to a JSON experiment config")

    sweep = sub.add_parser("sweep", help="run one experiment per parameter value")
    sweep.add_argument("--config", required=True, help="path to a JSON experiment config")
    sweep.add_argument("--kind", required=True, help="experiment kind")
    sweep.add_argument("--param", required=True, help="dotted config path, e.g. learner.schedule.ca")
    sweep.add_argument("--values", required=True, nargs="+", help="one value per run")

    report = sub.add_parser("report", help="render figures from an emitted manifest")
    report.add_argument("manifest", help="path to a *_manifest.json file")
    report.add_argument("--out-dir", help="directory for the figures (default: beside the manifest)")

    sub.add_parser("version", help="print the package version")
    return parser


def _parse_value(token: str):
    try:
        return json.loads(token)
    except json.JSONDecodeError:
        return token


def _cmd_run(args) -> int:
    if args.preset is not None:
        if args.kind is not None:
            raise ConfigError("--kind comes from the preset; do not pass both")
        cfg, kind = preset(args.preset)
    else:
        if args.kind is None:
            raise ConfigError("--kind is required with --config")
        cfg = load_config(args.config)
        kind = args.kind
    outputs = run_experiment(cfg, kind)
    if args.figures:
        from .report import render_report

        manifest = next(p for p in outputs if p.endswith("manifest.json"))
        outputs.extend(render_report(manifest))
    for path in outputs:
        print(path)
    return 0


def _cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    gamma = mean_abs(cfg.noise)
    bounds = density_bounds(cfg.noise, cfg.cov.cl, cfg.cov.cu)
    tau_bar = max(cfg.tau, 1.0 - cfg.tau)
    r23 = None
    if cfg.mode == BATCH:
        n_min = cfg.batch_size if isinstance(cfg.batch_size, int) else min(cfg.batch_size)
        r23 = batch_boundary_radius(cfg.d, n_min, bounds.b0, tau_bar, cfg.cov.cl, cfg.cov.cu)
    out = {
        "gamma": gamma,
        "b0": bounds.b0,
        "b1": bounds.b1,
        "tau_shift": cfg.noise.shift,
        "thresholds": {
            "r12": switch_radius(gamma, cfg.cov.cl, infinite=cfg.mode == INFINITE_STORAGE),
            "r23": r23,
        },
    }
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def _cmd_sweep(args) -> int:
    raw = load_raw(args.config)
    values = [_parse_value(tok) for tok in args.values]
    for path in run_sweep(raw, args.kind, args.param, values):
        print(path)
    return 0


def _cmd_report(args) -> int:
    from .report import render_report

    for path in render_report(args.manifest, args.out_dir):
        print(path)
    return 0


def cli_main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed usage; keep its exit code
        return int(exc.code or 0)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "report":
            return _cmd_report(args)
        print(__version__)
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures: I/O, divergence, numerics
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_main(sys.argv[1:]))
