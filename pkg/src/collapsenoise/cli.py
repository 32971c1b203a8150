"""Command-line front end: ``collapsenoise {alpha,bounds,sweep,simulate,table1}``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

from .config import ExperimentConfig, SweepSpec, load_config
from .core import NumericalError, ValidationError
from .geometry import alpha as compute_alpha
from .survey import (
    campaign_simulation,
    run_bounds,
    run_campaign,
    run_sweep,
    table1,
    to_json,
    write_rows_csv,
    write_sweep,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


def _experiment(path) -> ExperimentConfig:
    cfg = load_config(path)
    if not isinstance(cfg, ExperimentConfig):
        raise ValidationError(f"{path} is a sweep config; use the 'sweep' subcommand")
    return cfg


def _emit(args, text, filename):
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / filename).write_text(text)
        print(out / filename)
    else:
        sys.stdout.write(text)


def _flat_csv(record):
    import csv
    import io

    flat = {}
    for k, v in record.items():
        if isinstance(v, dict):
            flat.update({f"{k}.{kk}": vv for kk, vv in v.items()})
        else:
            flat[k] = v
    buf = io.StringIO()
    write_rows_csv([flat], buf, tuple(flat))
    return buf.getvalue()


def cmd_alpha(args):
    cfg = _experiment(args.config)
    method = args.method or cfg.alpha_method
    res = compute_alpha(cfg.geometry, cfg.oscillator.mass, cfg.collapse.r_csl, method)
    record = {
        "name": cfg.name,
        "shape": cfg.geometry.kind,
        "mass_kg": cfg.oscillator.mass,
        "r_csl_m": cfg.collapse.r_csl,
        "alpha": res.alpha,
        "method": res.method,
        "estimated_relative_error": res.estimated_relative_error,
    }
    text = to_json(record) + "\n" if args.format == "json" else _flat_csv(record)
    _emit(args, text, f"{cfg.name}_alpha.{args.format}")


def cmd_bounds(args):
    cfg = _experiment(args.config)
    omega = 2.0 * math.pi * args.omega_hz if args.omega_hz is not None else None
    record = run_bounds(cfg, omega)
    text = to_json(record) + "\n" if args.format == "json" else _flat_csv(record)
    _emit(args, text, f"{cfg.name}_bounds.{args.format}")


def cmd_sweep(args):
    spec = load_config(args.config)
    if not isinstance(spec, SweepSpec):
        raise ValidationError(f"{args.config} is not a sweep config (set kind = \"sweep\")")
    result = run_sweep(spec, workers=args.workers)
    for path in write_sweep(result, args.out or "."):
        print(path)


def cmd_simulate(args):
    cfg = _experiment(args.config)
    if cfg.simulation is None:
        raise ValidationError(f"{args.config} has no [simulation] section")
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, simulation=dataclasses.replace(cfg.simulation, seed=args.seed))
    if args.omega_hz is not None:
        cfg = cfg.with_omega(2.0 * math.pi * args.omega_hz)
    sim = campaign_simulation(cfg)
    report = run_campaign(cfg, sim, out_dir=args.out or ".", one_sided=args.one_sided)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    summary = report.summary()
    if args.format == "json":
        sys.stdout.write(to_json({"verdict": summary["verdict"],
                                  "comparison": summary["comparison"]}) + "\n")
    else:
        sys.stdout.write(_flat_csv({"verdict": summary["verdict"],
                                    "comparison": summary["comparison"]}))


def cmd_table1(args):
    rows = table1()
    if args.format == "json":
        text = to_json(rows) + "\n"
    else:
        import io

        buf = io.StringIO()
        write_rows_csv(rows, buf)
        text = buf.getvalue()
    _emit(args, text, f"table1.{args.format}")


def build_parser():
    p = argparse.ArgumentParser(
        prog="collapsenoise",
        description="Collapse-noise detectability bounds, sweeps and simulations.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True,
                            help="TOML file or bundled name such as table1/gw_detector")
        sp.add_argument("--out", help="output directory (default: stdout or cwd)")
        sp.add_argument("--format", choices=("csv", "json"), default="json")

    sp = sub.add_parser("alpha", help="geometry factor of a configured body")
    common(sp)
    sp.add_argument("--method", choices=("exact", "asymptotic", "quadrature"))
    sp.set_defaults(func=cmd_alpha)

    sp = sub.add_parser("bounds", help="Lambda_T, Lambda_SQL, Sigma_DP and intermediates")
    common(sp)
    sp.add_argument("--omega-hz", type=float, help="measurement frequency omega/2pi in Hz")
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("sweep", help="evaluate a sweep config on its grid and write CSV")
    common(sp)
    sp.add_argument("--workers", type=int, help="override the thread count")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("simulate", help="simulation campaign: record, PSD, verdict")
    common(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--omega-hz", type=float, help="measurement frequency omega/2pi in Hz")
    sp.add_argument("--one-sided", action="store_true",
                    help="write PSD CSVs one-sided (values doubled)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("table1", help="bounds for the bundled Table 1 systems")
    common(sp, config=False)
    sp.set_defaults(func=cmd_table1)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
