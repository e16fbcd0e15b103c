"""Command-line entry point: simulate, estimate, bootstrap, elasticity, montecarlo."""
import argparse
import csv
import os
import sys

import numpy as np

from .bootstrap import bootstrap_pipeline
from .config import EstimationConfig, config_from_mapping, read_config_file
from .designs import DESIGNS, gen_appendix_design
from .endogenous import estimate_with_covariates
from .errors import IterfuncError
from .montecarlo import APPENDIX_RESTRICT, run_monte_carlo, write_metrics
from .pipeline import elasticity_grid, estimate_pair
from .sample_io import load_sample, normalize_pair, write_sample
from .schedules import PriceSchedule

OUT_ENV = "ITERFUNC_OUT_DIR"
GRID_HEADER = ["point", "estimate", "ci_lo", "ci_hi"]


def _fmt(v):
    return repr(float(v))


def write_grid(path, points, estimate, lo=None, hi=None):
    """Grid file with columns point, estimate, ci_lo, ci_hi (CI cells may be empty)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GRID_HEADER)
        for i, (p, e) in enumerate(zip(points, estimate)):
            ci = ["", ""] if lo is None else [_fmt(lo[i]), _fmt(hi[i])]
            w.writerow([_fmt(p), _fmt(e)] + ci)


def write_pairs(path, items):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in items:
            w.writerow([k, v if isinstance(v, str) else _fmt(v)])


def _coefficients(text):
    try:
        return [float(t) for t in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value configuration file; flags override it")
    common.add_argument("--out-dir", help=f"output directory (default ${OUT_ENV} or .)")
    common.add_argument("--seed", type=int)
    common.add_argument("--grid-points", type=int)
    common.add_argument("--bootstrap-reps", type=int)
    common.add_argument("--bandwidth", type=float, help="fixed bandwidth instead of CV")
    common.add_argument("--tau-mode", choices=("normalize", "crossing", "given"))

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--sample1", required=True)
    data.add_argument("--sample2", required=True)
    data.add_argument("--design", choices=sorted(DESIGNS),
                      help="use the price schedules of a simulation design")
    data.add_argument("--schedule1", type=_coefficients,
                      help="ascending polynomial coefficients of P1 (with P1(0) = 0)")
    data.add_argument("--schedule2", type=_coefficients)
    data.add_argument("--tau1", type=float, help="price scale of sample 1 (tau-mode given)")
    data.add_argument("--no-normalize", action="store_true",
                      help="keep quantities as read (no zero drop or shift)")

    p = argparse.ArgumentParser(prog="iterfunc", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", parents=[common], help="draw samples from a design")
    s.add_argument("--design", required=True, choices=sorted(DESIGNS) + ["appendix"])
    s.add_argument("--n", type=int, required=True)
    sub.add_parser("estimate", parents=[common, data], help="estimate Lambda and utility")
    b = sub.add_parser("bootstrap", parents=[common, data], help="estimates with bootstrap bands")
    b.add_argument("--level", type=float)
    e = sub.add_parser("elasticity", parents=[common, data], help="demand elasticities")
    e.add_argument("--kind", choices=("level", "curvature", "convex"), default="level")
    e.add_argument("--target-schedule", type=_coefficients,
                   help="coefficients of the target schedule for --kind convex")
    e.add_argument("--points", type=int, default=50)
    m = sub.add_parser("montecarlo", parents=[common], help="simulation tables")
    m.add_argument("--design", required=True, choices=sorted(DESIGNS) + ["appendix"])
    m.add_argument("--n", type=int, nargs="+", required=True)
    m.add_argument("--reps", type=int, default=100)
    m.add_argument("--rho-scale", type=float)
    return p


def make_config(args):
    raw = read_config_file(args.config) if args.config else {}
    config = config_from_mapping(raw)
    return config.updated(seed=args.seed, grid_points=args.grid_points,
                          bootstrap_reps=args.bootstrap_reps, bandwidth=args.bandwidth,
                          tau_mode=args.tau_mode)


def out_dir(args):
    path = args.out_dir or os.environ.get(OUT_ENV) or "."
    os.makedirs(path, exist_ok=True)
    return path


def _schedules(args, has_iv):
    if args.design:
        p1, p2 = DESIGNS[args.design].schedules()
    elif args.schedule1 and args.schedule2:
        p1 = PriceSchedule.polynomial(args.schedule1, label="P1")
        p2 = PriceSchedule.polynomial(args.schedule2, label="P2")
    elif has_iv:
        return None
    else:
        raise IterfuncError("price schedules needed: pass --design, --schedule1/--schedule2, "
                            "or samples with prices and covariates")
    if args.tau1 is not None:
        p1 = p1.with_tau(args.tau1)
    return p1, p2


def _load(args):
    s1 = load_sample(args.sample1, period_label=1)
    s2 = load_sample(args.sample2, period_label=2)
    return s1, s2


def _prepare(args, config):
    """Loaded (and normalized) samples, schedules and summary rows."""
    s1, s2 = _load(args)
    has_iv = all(s.prices is not None and s.covariates is not None for s in (s1, s2))
    scheds = _schedules(args, has_iv)
    info = []
    if scheds is not None and not args.no_normalize:
        s1, s2, zeros, q_lower = normalize_pair(s1, s2)
        scheds = tuple(s.shifted(q_lower) for s in scheds)
        info += [("zero_share1", zeros[0]), ("zero_share2", zeros[1]), ("q_lower", q_lower)]
    if scheds is not None and config.tau_mode == "normalize" and args.tau1 is not None:
        config = config.updated(tau_mode="given")
    return s1, s2, scheds, config, info


def _summary(est, info):
    o = est.orientation
    return info + [
        ("bandwidth1", est.bandwidths[0]), ("bandwidth2", est.bandwidths[1]),
        ("tau1", o.tau1), ("iterations", float(est.solution.iterations)),
        ("segments", float(len(o.segments))), ("converged", str(est.solution.converged)),
    ]


def cmd_simulate(args, config):
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, args.n]))
    if args.design == "appendix":
        s1, s2 = gen_appendix_design(args.n, rng)
    else:
        s1, s2 = DESIGNS[args.design].generate(args.n, rng)
    d = out_dir(args)
    write_sample(s1, os.path.join(d, "sample1.csv"))
    write_sample(s2, os.path.join(d, "sample2.csv"))
    return 0


def _estimate_covariates(args, config, s1, s2):
    ce = estimate_with_covariates(s1, s2, config, restrict_zero=APPENDIX_RESTRICT)
    d = out_dir(args)
    rows = [("tau1", ce.tau1)]
    rows += [(f"theta1_{k}", v) for k, v in enumerate(ce.theta1.theta)]
    rows += [(f"theta2_{k}", v) for k, v in enumerate(ce.theta2.theta)]
    rows += [("eta2_sd", float(np.std(ce.eta2)))]
    write_pairs(os.path.join(d, "summary.csv"), rows)
    for x, est in ce.pairs.items():
        write_grid(os.path.join(d, f"lambda_grid_x{x}.csv"), est.solution.alpha, est.solution.values)
        write_grid(os.path.join(d, f"utility_grid_x{x}.csv"), est.utility.q_grid, est.utility.u_values)
        write_grid(os.path.join(d, f"eps_cdf_x{x}.csv"), ce.eps_grid, ce.cond_cdf[x])
    return 0


def cmd_estimate(args, config, bands=False):
    s1, s2, scheds, config, info = _prepare(args, config)
    if scheds is None:
        return _estimate_covariates(args, config, s1, s2)
    est = estimate_pair(s1.quantities, s2.quantities, *scheds, config)
    d = out_dir(args)
    lam = util = None
    if bands:
        level = args.level if args.level is not None else config.bootstrap_level
        lam = bootstrap_pipeline(s1.quantities, s2.quantities, *scheds, config, "lambda",
                                 point=est, level=level)
        util = bootstrap_pipeline(s1.quantities, s2.quantities, *scheds, config, "utility",
                                  point=est, level=level)
    sol, u = est.solution, est.utility
    write_grid(os.path.join(d, "lambda_grid.csv"), sol.alpha, sol.values,
               *((lam.lo, lam.hi) if lam else ()))
    write_grid(os.path.join(d, "utility_grid.csv"), u.q_grid, u.u_values,
               *((util.lo, util.hi) if util else ()))
    write_pairs(os.path.join(d, "summary.csv"), _summary(est, info))
    return 0


def cmd_elasticity(args, config):
    s1, s2, scheds, config, info = _prepare(args, config)
    if scheds is None:
        raise IterfuncError("elasticities need known or polynomial price schedules")
    dP0 = None
    if args.kind == "convex":
        if not args.target_schedule:
            raise IterfuncError("--kind convex needs --target-schedule")
        dP0 = PriceSchedule.polynomial(args.target_schedule).deriv
    est = estimate_pair(s1.quantities, s2.quantities, *scheds, config)
    Q, e = elasticity_grid(est, kind=args.kind, dP0=dP0, n_points=args.points)
    lo = hi = None
    if args.bootstrap_reps:
        bands = bootstrap_pipeline(s1.quantities, s2.quantities, *scheds, config, "elasticity",
                                   point=est, elasticity_q=Q, elasticity_kind=args.kind, dP0=dP0)
        lo, hi = bands.lo, bands.hi
    d = out_dir(args)
    write_grid(os.path.join(d, "elasticity_grid.csv"), Q, e, lo, hi)
    write_pairs(os.path.join(d, "summary.csv"), _summary(est, info))
    return 0


def cmd_montecarlo(args, config):
    kw = {} if args.rho_scale is None else {"rho_scale": args.rho_scale}
    results = [run_monte_carlo(args.design, n, args.reps, config, **kw) for n in args.n]
    d = out_dir(args)
    write_metrics(os.path.join(d, f"montecarlo_design{args.design}.csv"), results)
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = make_config(args)
        if args.command == "simulate":
            return cmd_simulate(args, config)
        if args.command == "estimate":
            return cmd_estimate(args, config)
        if args.command == "bootstrap":
            return cmd_estimate(args, config, bands=True)
        if args.command == "elasticity":
            return cmd_elasticity(args, config)
        return cmd_montecarlo(args, config)
    except (IterfuncError, ValueError, OSError) as exc:
        print(f"iterfunc {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
