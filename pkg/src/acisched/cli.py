"""Command-line front end.

Exit status is 0 on success and 2 on any configuration error (bad flags,
bad config file, inconsistent inputs, or an exact search that is too big).
"""
from __future__ import annotations

import argparse
import os
import sys

from .core import Schedule, success_matrix
from .csvio import read_matrix_csv, write_matrix_csv, write_rows_csv
from .errors import ConfigurationError, SearchTooLarge
from .exact import exact_joint, exact_power, exact_schedule
from .harness import (ExperimentConfig, default_toml, draw_instance, fairness_report, run_sweep,
                      simulate, summary_rows)
from .lpmodel import ModelKind, ModelSpec, build_model, model_stats, write_lp
from .power import equal_power, heuristic_power
from .schedulers import bis_schedule, heuristic_schedule


def _load_config(args, **overrides):
    cfg = ExperimentConfig.from_toml(args.config) if args.config else ExperimentConfig()
    changes = {k: v for k, v in overrides.items() if v is not None}
    for key in ("N", "F", "T", "aci", "duplex", "grid_levels", "objective"):
        value = getattr(args, key, None)
        if value is not None:
            changes[key] = value
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    try:
        return cfg.with_(**changes) if changes else cfg
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(str(exc)) from exc


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)


def _read_schedule(path, params):
    try:
        U, meta = read_matrix_csv(path, dtype=int)
    except (OSError, ValueError) as exc:
        raise ConfigurationError(f"cannot read schedule {path}: {exc}") from exc
    if meta["N"] != params.N or U.shape != (params.F, params.T):
        raise ConfigurationError(
            f"schedule is {U.shape} for N={meta['N']}, expected {(params.F, params.T)} for N={params.N}")
    try:
        return Schedule(U, params.N)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc


def cmd_schedule(args):
    cfg = _load_config(args)
    params, H, A, links = draw_instance(cfg)
    if args.algo == "bis":
        sched = bis_schedule(params.N, params.F, params.T, args.w)
    elif args.algo == "heuristic":
        sched = heuristic_schedule(params, H, A, params.p_max, links)
    else:
        sched = exact_schedule(params, H, A, params.p_max, links, cfg.exact_config()).schedule
    J = success_matrix(sched, params.p_max, H, A, links, params).J
    meta = {"algo": args.algo, "w": args.w, "seed": cfg.seed, "F": params.F, "T": params.T,
            "J_equal_power": J}
    _emit(write_matrix_csv(args.out, sched.U, params.N, meta), args.out)
    return 0


def cmd_power(args):
    cfg = _load_config(args)
    params, H, A, links = draw_instance(cfg)
    sched = _read_schedule(args.schedule, params)
    meta = {"algo": args.algo, "seed": cfg.seed, "unit": "mW"}
    if args.algo == "equal":
        P = equal_power(params)
        meta["iterations"] = 0
    elif args.algo == "heuristic":
        res = heuristic_power(params, sched, H, A, links)
        P = res.P
        meta.update(iterations=res.iterations, converged=res.converged, initial_links=res.initial_links)
    else:
        res = exact_power(params, sched, H, A, links, cfg.exact_config())
        P = res.P
        meta.update(iterations=0, grid_levels=cfg.grid_levels, evaluations=res.evaluations)
    meta["J"] = success_matrix(sched, P, H, A, links, params).J
    _emit(write_matrix_csv(args.out, P, params.N, meta), args.out)
    return 0


def cmd_joint(args):
    cfg = _load_config(args)
    params, H, A, links = draw_instance(cfg)
    res = exact_joint(params, H, A, links, cfg.exact_config())
    meta = {"objective": cfg.objective, "seed": cfg.seed, "J": res.J, "value": res.value}
    text = write_matrix_csv(args.out, res.schedule.U, params.N, meta)
    text += write_matrix_csv(args.power_out, res.P, params.N, meta) if args.power_out else ""
    _emit(text, args.out)
    return 0


def cmd_emit_model(args):
    cfg = _load_config(args)
    params, H, A, links = draw_instance(cfg)
    half = params.half_duplex if args.half_duplex is None else args.half_duplex
    kind = ModelKind(args.kind)
    fixed_X = fixed_P = None
    if kind is ModelKind.MILP:
        fixed_X = (_read_schedule(args.schedule, params) if args.schedule
                   else bis_schedule(params.N, params.F, params.T, args.w))
    if kind is ModelKind.BLP:
        if args.power:
            try:
                fixed_P, _ = read_matrix_csv(args.power)
            except (OSError, ValueError) as exc:
                raise ConfigurationError(f"cannot read powers {args.power}: {exc}") from exc
        else:
            fixed_P = equal_power(params)
    spec = ModelSpec(kind, half_duplex=half, maxmin=args.maxmin, restrict_links=args.restrict_links,
                     fixed_X=fixed_X, fixed_P=fixed_P)
    if args.out:
        model = build_model(spec, params, H, A, links)
        try:
            write_lp(model, args.out)
        except OSError as exc:
            raise ConfigurationError(f"cannot write {args.out}: {exc}") from exc
        stats = model.stats()
    else:
        stats = model_stats(spec, params, links)
    if args.stats or not args.out:
        print(stats.to_json())
    return 0


def cmd_simulate(args):
    cfg = _load_config(args, replications=args.reps, out=args.out, workers=args.workers)
    point = simulate(cfg)
    rows = summary_rows(point)
    cdf_rows, per_vue = fairness_report(cfg, point)
    header = [f"seed={cfg.seed}", f"replications={cfg.replications}", f"N={cfg.N}",
              f"F={cfg.F}", f"T={cfg.T}", f"aci={cfg.aci}"]
    write_rows_csv(os.path.join(cfg.out, "summary.csv"), rows, header)
    write_rows_csv(os.path.join(cfg.out, "fairness_cdf.csv"), cdf_rows, header)
    write_rows_csv(os.path.join(cfg.out, "fairness_per_vue.csv"), per_vue, header)
    for r in rows:
        power = r["avg_tx_power_dbm"]
        power = "n/a" if power is None else f"{power:.2f} dBm"
        w = f"  (w={r['w']})" if r["w"] != "" else ""
        print(f"{r['algorithm']:<22} Zbar={r['z_bar']:.3f} +- {r['std_error']:.3f}  {power}{w}")
    return 0


def cmd_sweep(args):
    changes = dict(replications=args.reps, out=args.out, workers=args.workers)
    if args.axis is not None:
        changes["sweep_axis"] = args.axis
    if args.values is not None:
        changes["sweep_values"] = tuple(args.values)
    cfg = _load_config(args, **changes)
    if cfg.sweep_axis is None:
        raise ConfigurationError("no sweep axis: pass --axis/--values or a [sweep] table")
    result = run_sweep(cfg)
    for path in result.write(cfg.out):
        print(path)
    return 0


def cmd_init_config(args):
    text = default_toml()
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return 0


def _common(p, instance=True):
    p.add_argument("--config", help="TOML configuration file")
    p.add_argument("--seed", type=int, help="base seed (default from config)")
    if instance:
        p.add_argument("-N", type=int, dest="N")
        p.add_argument("-F", type=int, dest="F")
        p.add_argument("-T", type=int, dest="T")
        p.add_argument("--aci", help="gpp3, none, or custom:1=1e-3,4=1e-4")
        p.add_argument("--duplex", choices=["half", "full"])


def _exact_flags(p):
    p.add_argument("--grid-levels", type=int, dest="grid_levels", metavar="K")
    p.add_argument("--objective", choices=["sum", "maxmin"])


def build_parser():
    parser = argparse.ArgumentParser(prog="acisched", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schedule", help="build a schedule U and print it as CSV")
    _common(p)
    _exact_flags(p)
    p.add_argument("--algo", choices=["bis", "heuristic", "exact"], default="bis")
    p.add_argument("--w", type=int, default=1, help="BIS interleaver width")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("power", help="power control for a schedule CSV")
    _common(p)
    _exact_flags(p)
    p.add_argument("--algo", choices=["equal", "heuristic", "exact"], default="heuristic")
    p.add_argument("--schedule", required=True, help="schedule CSV written by 'schedule'")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("joint", help="exact joint schedule and grid power search")
    _common(p)
    _exact_flags(p)
    p.add_argument("--out", help="schedule CSV (default stdout)")
    p.add_argument("--power-out", help="power CSV")
    p.set_defaults(func=cmd_joint)

    p = sub.add_parser("emit-model", help="write the optimisation model in LP format")
    _common(p)
    p.add_argument("--kind", choices=[k.value for k in ModelKind], default="joint")
    hd = p.add_mutually_exclusive_group()
    hd.add_argument("--half-duplex", dest="half_duplex", action="store_true", default=None)
    hd.add_argument("--full-duplex", dest="half_duplex", action="store_false")
    p.add_argument("--maxmin", action="store_true")
    p.add_argument("--restrict-links", action="store_true",
                   help="declare V and W only for intended links")
    p.add_argument("--schedule", help="fixed schedule CSV for --kind milp (default BIS)")
    p.add_argument("--w", type=int, default=1)
    p.add_argument("--power", help="fixed power CSV for --kind blp (default p_max)")
    p.add_argument("--out", help="LP file to write")
    p.add_argument("--stats", action="store_true", help="print variable/row counts as JSON")
    p.set_defaults(func=cmd_emit_model)

    for name, func, text in (("simulate", cmd_simulate, "Monte Carlo run at one parameter point"),
                             ("sweep", cmd_sweep, "Monte Carlo sweep over N, F or T")):
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("--reps", type=int, help="replications")
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=int)
        if name == "sweep":
            p.add_argument("--axis", choices=["N", "F", "T"])
            p.add_argument("--values", type=int, nargs="+")
        p.set_defaults(func=func)

    p = sub.add_parser("init-config", help="print the default configuration as TOML")
    p.add_argument("--out")
    p.set_defaults(func=cmd_init_config)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, SearchTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
