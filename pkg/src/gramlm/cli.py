"""Command-line front end.

``gramlm solve`` runs one method at one parameter point and audits the
trace; ``gramlm bench`` sweeps tuning grids and writes a summary. Exit
codes: 0 on success, 2 for specification/input errors, 3 when a run
diverges or a benchmarked method fails at every grid point.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .diagnostics import audit_trace
from .harness import (
    DEFAULT_ETA_GRID,
    DEFAULT_REG_C_GRID,
    ExperimentSpec,
    SpecError,
    emit_trace_csv,
    initial_point,
    run_experiment,
    _make_problem,
    _run_label,
)
from .h_equation import DEFAULT_C_PARAM
from .solvers import DivergenceError, SolverConfig, run_solver


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_problem_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", choices=("heq", "logistic"), default="heq")
    p.add_argument("--n", type=int, default=100, help="H-equation system size")
    p.add_argument("--c-param", type=float, default=DEFAULT_C_PARAM,
                   help="H-equation physical constant in [0, 1]")
    p.add_argument("--data", type=str, default=None, help="LIBSVM dataset path")
    p.add_argument("--dim", type=int, default=None, help="feature-dimension override")
    p.add_argument("--reg-lambda", type=float, default=0.1,
                   help="logistic penalty weight")
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--tol", type=float, default=1e-8, help="stationarity tolerance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--solve-mode", choices=("svd", "direct"), default=None,
                   help="damped-system solve (default: direct for lm, svd otherwise)")
    p.add_argument("--out", type=str, default=".", help="output directory")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gramlm",
                                     description="solvers and benchmarks for F(x) = 0")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run one configuration and audit its trace")
    _add_problem_flags(solve)
    solve.add_argument("--method", choices=("gd", "lm", "grlm"), default="grlm")
    solve.add_argument("--eta", type=float, default=0.1, help="gd step size")
    solve.add_argument("--reg-c", type=float, default=1.0, help="lm/grlm damping constant")
    solve.add_argument("--m", type=int, default=50, help="grlm snapshot period")

    bench = sub.add_parser("bench", help="sweep tuning grids and summarize")
    _add_problem_flags(bench)
    bench.add_argument("--method", action="append", choices=("gd", "lm", "grlm"),
                       default=None, help="repeat to select methods (default: all)")
    bench.add_argument("--eta", type=_float_list, default=list(DEFAULT_ETA_GRID),
                       help="comma-separated gd grid")
    bench.add_argument("--reg-c", type=_float_list, default=list(DEFAULT_REG_C_GRID),
                       help="comma-separated lm/grlm grid")
    bench.add_argument("--m", type=_int_list, default=[50],
                       help="comma-separated grlm snapshot periods")
    bench.add_argument("--gd-max-iters", type=int, default=None,
                       help="separate iteration cap for gd")
    bench.add_argument("--jobs", type=int, default=1,
                       help="concurrent grid points (1 = sequential, exact timings)")
    return parser


def _cmd_solve(args) -> int:
    spec = ExperimentSpec(
        problem=args.problem, methods=(args.method,), n=args.n, c_param=args.c_param,
        data_path=args.data, dim_override=args.dim, reg_lambda=args.reg_lambda,
        max_iters=args.max_iters, tol_eps=args.tol, seed=args.seed,
        solve_mode=args.solve_mode, out_dir=args.out,
    )
    spec.validate()
    config = SolverConfig(
        method=args.method, reg_c=args.reg_c, step_eta=args.eta, m=args.m,
        max_iters=args.max_iters, tol_eps=args.tol, seed=args.seed,
        solve_mode=args.solve_mode,
    )
    if args.problem == "logistic":
        from .logistic import load_libsvm

        dataset = load_libsvm(args.data, d=args.dim)
        if dataset.n == 0:
            raise SpecError(f"dataset {args.data} has no samples")
    else:
        dataset = None
    problem = _make_problem(spec, dataset)
    x0 = initial_point(spec, problem.dimension)

    if args.method == "gd":
        params = {"eta": args.eta}
    elif args.method == "lm":
        params = {"reg_c": args.reg_c}
    else:
        params = {"reg_c": args.reg_c, "m": args.m}
    label = _run_label(args.method, params)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{label}.csv"

    code = 0
    try:
        trace = run_solver(problem, config, x0)
    except DivergenceError as err:
        trace = err.trace
        print(f"error: {err}", file=sys.stderr)
        code = 3
    emit_trace_csv(trace, path)
    if trace:
        last = trace[-1]
        status = "converged" if last.grad_norm <= args.tol and code == 0 else "stopped"
        print(f"{label}: {status} after {len(trace)} iterations, "
              f"grad_norm={last.grad_norm:.3e}, jv={last.jv_cumulative}, "
              f"trace={path}")
    for line in audit_trace(trace, config, trace_id=label).lines():
        print(line)
    return code


def _cmd_bench(args) -> int:
    spec = ExperimentSpec(
        problem=args.problem,
        methods=tuple(args.method) if args.method else ("gd", "lm", "grlm"),
        n=args.n, c_param=args.c_param, data_path=args.data, dim_override=args.dim,
        reg_lambda=args.reg_lambda, eta_grid=tuple(args.eta),
        reg_c_grid=tuple(args.reg_c), m_list=tuple(args.m),
        max_iters=args.max_iters, gd_max_iters=args.gd_max_iters,
        tol_eps=args.tol, seed=args.seed, solve_mode=args.solve_mode,
        out_dir=args.out, jobs=args.jobs,
    )
    result = run_experiment(spec)
    for method in spec.methods:
        out = result.best[method]
        if out is None:
            print(f"{method}: failed (no grid point reached tol={spec.tol_eps:g})")
        else:
            print(f"{method}: best {out.label} jv={out.jv_to_tol} "
                  f"iters={out.iterations} grad_norm={out.final_grad_norm:.3e}")
    print(f"summary: {result.summary_path}")
    return 3 if result.failed_methods else 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        return _cmd_bench(args)
    except (SpecError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except DivergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
