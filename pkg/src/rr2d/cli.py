"""Command line entry point.

Exit codes: 0 success, 1 configuration error, 2 numeric error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import completion, harness
from .errors import ConfigError, DomainError, NumericError
from .hybrid import SubArrayPartition, hierarchical_schedule
from .plotting import emit_plot_data

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


def _cmd_sweep(args):
    cfg = harness.load_config(args.config)
    if args.trials is not None:
        cfg["n_trials"] = args.trials
    config = harness.ExperimentConfig.from_mapping(cfg)
    records = harness.run_sweep(config, args.out, workers=args.workers)
    emit_plot_data(records, args.out)
    for r in records:
        print(f"{r.snr_db:g}\t{r.method}\t{r.mean_sinr_db:.3f}")


def _cmd_hessian(args):
    config = harness.ExperimentConfig.from_mapping(harness.load_config(args.config))
    res = harness.run_hessian_experiment(config, args.points, args.realizations, args.fd_step,
                                         args.out, objective=args.objective)
    print(f"eigenvalues {res.eigenvalues.size}  negative {res.fraction_negative:.3f}  "
          f"positive {res.fraction_positive:.3f}  skipped {res.n_skipped}")


def _cmd_complete(args):
    inc = completion.read_masked_matrix(args.inp)
    R, report = completion.dykstra_complete(inc)
    completion.write_matrix(args.out, R, inc.mask, report)
    print(f"iterations {report.iterations_run} converged {report.converged}")


def _cmd_schedule(args):
    sched = hierarchical_schedule(SubArrayPartition(args.nd, args.ns), args.ks)
    for cfg in sched.configs:
        print(",".join(str(i) for i in cfg))


def build_parser():
    p = argparse.ArgumentParser(prog="rr2d", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="Monte Carlo SINR sweep over all methods")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--trials", type=int, help="override n_trials")
    s.add_argument("--workers", type=int)
    s.set_defaults(func=_cmd_sweep)

    h = sub.add_parser("hessian", help="Hessian eigenvalue (nonconvexity) experiment")
    h.add_argument("--config", required=True)
    h.add_argument("--points", type=int, default=10)
    h.add_argument("--realizations", type=int, default=20)
    h.add_argument("--fd-step", type=float, default=1e-4)
    h.add_argument("--objective", choices=("mvdr", "mse"), default="mvdr")
    h.add_argument("--out", required=True)
    h.set_defaults(func=_cmd_hessian)

    c = sub.add_parser("complete", help="complete a masked covariance matrix file")
    c.add_argument("--in", dest="inp", required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=_cmd_complete)

    d = sub.add_parser("schedule", help="print the switching schedule")
    d.add_argument("--nd", type=int, required=True)
    d.add_argument("--ns", type=int, required=True)
    d.add_argument("--ks", type=int, default=1)
    d.set_defaults(func=_cmd_schedule)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
