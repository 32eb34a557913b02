"""Command-line entry point for the experiment harness.

Each subcommand runs one experiment and writes plot-ready CSV plus a
structured-text metadata sidecar (``<out>.meta``). Without ``--out`` the CSV
goes to stdout. Exit codes: 0 success, 2 configuration error, 3 solver
failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..conic import SolverFailure
from .experiments import (
    ConfigError,
    ExperimentConfig,
    run_admission_demo,
    run_convergence_comparison,
    run_gsbf_demo,
    run_nmse_curve,
    run_sparse_phase_transition,
    run_tim_phase_transition,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with 2, matching EXIT_CONFIG
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=0, help="base seed")
    sub.add_argument("--trials", type=int, default=20, help="trials per cell")
    sub.add_argument("--out", type=str, default=None, help="output CSV path")
    sub.add_argument("--jobs", type=int, default=1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="udnopt", description=__doc__)
    subs = parser.add_subparsers(dest="kind", required=True)

    sp = subs.add_parser("sparse-pt", help="sparse recovery phase transition")
    _add_common(sp)
    sp.add_argument("--n", type=int, default=100)
    sp.add_argument("--m", type=int, default=2)
    sp.add_argument("--k-min", type=int, default=0)
    sp.add_argument("--k-max", type=int, default=20)
    sp.add_argument("--l-min", type=int, default=4)
    sp.add_argument("--l-max", type=int, default=None)
    sp.add_argument("--l-step", type=int, default=4)

    sp = subs.add_parser("nmse", help="NMSE of group lasso vs pilot length")
    _add_common(sp)
    sp.add_argument("--n", type=int, default=100)
    sp.add_argument("--m", type=int, default=2)
    sp.add_argument("--k", type=int, default=20)
    sp.add_argument("--l-min", type=int, default=4)
    sp.add_argument("--l-max", type=int, default=None)
    sp.add_argument("--l-step", type=int, default=4)
    sp.add_argument("--noise-sd", type=float, default=0.1)
    sp.add_argument("--lambda-scale", type=float, default=1.0)

    sp = subs.add_parser("tim-pt", help="TIM fixed-rank completion phase transition")
    _add_common(sp)
    sp.add_argument("--k", type=int, default=30)
    sp.add_argument("--rank-max", type=int, default=10)
    sp.add_argument("--s-step", type=int, default=58)
    sp.add_argument("--restarts", type=int, default=10)

    sp = subs.add_parser("converge", help="fixed-rank solver convergence comparison")
    _add_common(sp)
    sp.add_argument("--p", type=int, default=100)
    sp.add_argument("--q", type=int, default=100)
    sp.add_argument("--rank", type=int, default=5)
    sp.add_argument("--omega", type=int, default=400)
    sp.add_argument("--solvers", type=str, default="rcg,rtr,altmin",
                    help="comma-separated subset of rcg,rtr,altmin")
    sp.add_argument("--max-iters", type=int, default=500)

    for name, helptext in (
        ("gsbf", "group sparse beamforming demo"),
        ("admission", "user admission demo"),
    ):
        sp = subs.add_parser(name, help=helptext)
        _add_common(sp)
        sp.add_argument("--instance", type=str, default=None, help="instance file")
        sp.add_argument("--l", type=int, default=4, help="RRH count (generator)")
        sp.add_argument("--k", type=int, default=3, help="user count (generator)")
        sp.add_argument("--sinr-target", type=float, default=1.0)
        sp.add_argument("--p-max", type=float, default=1.0)

    return parser


def _config_from_args(args) -> ExperimentConfig:
    common = dict(kind=args.kind, seed=args.seed, trials=args.trials, jobs=args.jobs)
    if args.kind == "sparse-pt":
        return ExperimentConfig(
            **common, n=args.n, m=args.m, k_min=args.k_min, k_max=args.k_max,
            l_min=args.l_min, l_max=args.l_max, l_step=args.l_step,
        )
    if args.kind == "nmse":
        return ExperimentConfig(
            **common, n=args.n, m=args.m, k=args.k, l_min=args.l_min,
            l_max=args.l_max, l_step=args.l_step, noise_sd=args.noise_sd,
            lambda_scale=args.lambda_scale,
        )
    if args.kind == "tim-pt":
        return ExperimentConfig(
            **common, k=args.k, rank_max=args.rank_max, s_step=args.s_step,
            restarts=args.restarts,
        )
    if args.kind == "converge":
        return ExperimentConfig(
            **common, p=args.p, q=args.q, rank=args.rank, omega=args.omega,
            solvers=tuple(s for s in args.solvers.split(",") if s),
            max_iters=args.max_iters,
        )
    return ExperimentConfig(
        **common, instance=args.instance, l_rrh=args.l, k_users=args.k,
        sinr_target=args.sinr_target, p_max=args.p_max,
    )


def _emit(csv_text: str, meta_text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(csv_text)
        return
    path = Path(out)
    path.write_text(csv_text)
    path.with_name(path.name + ".meta").write_text(meta_text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.kind == "sparse-pt":
            grid = run_sparse_phase_transition(cfg)
            _emit(grid.to_csv(), grid.metadata_text(), args.out)
        elif args.kind == "nmse":
            table = run_nmse_curve(cfg)
            _emit(table.to_csv(), table.metadata_text(), args.out)
        elif args.kind == "tim-pt":
            grid = run_tim_phase_transition(cfg)
            _emit(grid.to_csv(), grid.metadata_text(), args.out)
        elif args.kind == "converge":
            table, traces = run_convergence_comparison(cfg)
            _emit(table.to_csv(), table.metadata_text(), args.out)
            if args.out is not None:
                base = Path(args.out)
                for solver, runs in traces.items():
                    if runs:  # trace of the first seed, plot-ready
                        p = base.with_name(base.stem + f".{solver}.trace.csv")
                        p.write_text(runs[0].to_csv())
        elif args.kind == "gsbf":
            table = run_gsbf_demo(cfg)
            _emit(table.to_csv(), table.metadata_text(), args.out)
        else:
            table = run_admission_demo(cfg)
            _emit(table.to_csv(), table.metadata_text(), args.out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
