"""``rfm-lab`` command line interface.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
import argparse
import csv
import io
import os
import sys

import numpy as np

from . import activations, hermite, optimizer
from .experiments import ConfigError, diagnose, grid_points, load_config, run
from .ridge import NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _cmd_run(args):
    cfg = load_config(args.config, master_seed=args.seed, threads=args.threads)
    out = args.out or cfg.output
    if not out:
        raise ConfigError("no output directory: pass --out or set 'output' in the config")
    result = run(cfg)
    for path in result.write(out):
        print(path)
    return EXIT_OK


def _cmd_diagnose(args):
    cfg = load_config(args.config, master_seed=args.seed, c_threshold=args.c_threshold)
    sys.stdout.write(diagnose(cfg))
    return EXIT_OK


def _cmd_optimize(args):
    cfg = load_config(args.config, master_seed=args.seed)
    points = grid_points(cfg)
    if args.point is None:
        point = points[len(points) // 2]
    elif 0 <= args.point < len(points):
        point = points[args.point]
    else:
        raise ConfigError(f"--point must be in [0, {len(points) - 1}]")
    scenario = point.scenario(cfg, cfg.targets[0])
    search = optimizer.optimize_family(scenario, args.family, seed=cfg.master_seed, budget=args.budget,
                                       seed_count=cfg.optimizer_seeds)
    names = optimizer.TRACE_HEADER[args.family][4:]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["family", "grid_param", "grid_value", "best_objective", "evaluations", "budget_exhausted"] + names)
    w.writerow([args.family, point.param, repr(point.value), repr(search.best_objective), len(search.trace),
                int(search.budget_exhausted)] + [repr(float(c)) for c in search.best_coeffs])
    sys.stdout.write(buf.getvalue())
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, f"optimize_{args.family}_trace.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            tw = csv.writer(fh, lineterminator="\n")
            tw.writerow(optimizer.TRACE_HEADER[args.family])
            for row in search.trace:
                tw.writerow([row[0], row[1]] + [repr(float(v)) for v in row[2:]])
        with open(os.path.join(args.out, f"optimize_{args.family}.csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    return EXIT_OK


def _cmd_hermite(args):
    try:
        act = activations.parse(args.activation)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.max_degree < 0 or args.order < 1:
        raise ConfigError("--max-degree must be >= 0 and --order >= 1")
    try:
        coeffs = activations.coefficients(act, args.max_degree, args.order)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["j", "mu_j", "mu_star_l", "l"])
    for j, mu in enumerate(coeffs.mu):
        # mu*_{j+1} is the residual after keeping degrees 0..j
        w.writerow([j, repr(float(mu)), repr(coeffs.noise_level(j + 1)), j + 1])
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="rfm-lab", description="Random feature model experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment and write CSVs")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.add_argument("--threads", type=int)
    r.add_argument("--seed", type=int)
    r.set_defaults(func=_cmd_run)

    d = sub.add_parser("diagnose", help="print equivalence diagnostics as CSV")
    d.add_argument("--config", required=True)
    d.add_argument("--seed", type=int)
    d.add_argument("--c-threshold", type=float, dest="c_threshold")
    d.set_defaults(func=_cmd_diagnose)

    o = sub.add_parser("optimize", help="search optimal linear or cubic coefficients")
    o.add_argument("--family", choices=sorted(optimizer.FAMILIES), required=True)
    o.add_argument("--config", required=True)
    o.add_argument("--budget", type=int, default=300)
    o.add_argument("--seed", type=int)
    o.add_argument("--point", type=int, help="grid point index (default: middle of the grid)")
    o.add_argument("--out", help="directory for the best-coefficient and trace CSVs")
    o.set_defaults(func=_cmd_optimize)

    h = sub.add_parser("hermite-coeffs", help="print Hermite coefficients as CSV")
    h.add_argument("--activation", required=True)
    h.add_argument("--max-degree", type=int, default=hermite.DEFAULT_MAX_DEGREE, dest="max_degree")
    h.add_argument("--order", type=int, default=hermite.DEFAULT_ORDER)
    h.set_defaults(func=_cmd_hermite)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # domain errors raised while building scenarios from a valid-looking config
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
