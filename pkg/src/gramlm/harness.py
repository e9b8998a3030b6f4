"""Experiment harness: single runs, tuning-grid sweeps, CSV traces.

A sweep runs every grid point of every selected method on one problem,
writes one trace file per run (partial traces included for diverged runs),
and selects per method the grid point that reached the stationarity
tolerance with the fewest cumulative Jacobian-vector products, breaking
ties by wall time and then by smaller parameter values. Everything except
the wall_seconds column is byte-reproducible for a fixed spec, seed, and
build.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .h_equation import DEFAULT_C_PARAM, HEquationProblem
from .logistic import LogisticProblem, SparseDataset, load_libsvm
from .solvers import DivergenceError, IterationRecord, SolverConfig, run_solver

__all__ = [
    "DEFAULT_ETA_GRID",
    "DEFAULT_REG_C_GRID",
    "ExperimentResult",
    "ExperimentSpec",
    "RunOutcome",
    "SpecError",
    "TRACE_HEADER",
    "emit_trace_csv",
    "read_trace_csv",
    "run_experiment",
]

# Default tuning grids for the benchmark sweeps.
DEFAULT_ETA_GRID = tuple(round(0.1 * k, 1) for k in range(1, 11))
DEFAULT_REG_C_GRID = (1.0, 10.0, 100.0, 1000.0)
DEFAULT_M_LIST = (50,)

TRACE_HEADER = "t,grad_norm,merit,lambda,r,jv_cumulative,wall_seconds,snapshot"

PROBLEMS = ("heq", "logistic")


class SpecError(ValueError):
    """Invalid experiment specification."""


@dataclass(frozen=True)
class ExperimentSpec:
    """One benchmark sweep: a problem, methods with their grids, stopping
    policy, and an output directory.

    ``gd_max_iters`` optionally gives gradient descent its own (usually
    larger) iteration cap; the damped methods stop early long before such
    caps matter.
    """

    problem: str
    methods: tuple = ("gd", "lm", "grlm")
    n: int = 100
    c_param: float = DEFAULT_C_PARAM
    data_path: str | None = None
    dim_override: int | None = None
    reg_lambda: float = 0.1
    eta_grid: tuple = DEFAULT_ETA_GRID
    reg_c_grid: tuple = DEFAULT_REG_C_GRID
    m_list: tuple = DEFAULT_M_LIST
    max_iters: int = 5000
    gd_max_iters: int | None = None
    tol_eps: float = 1e-8
    seed: int = 0
    solve_mode: str | None = None
    out_dir: str = "."
    jobs: int = 1

    def validate(self) -> None:
        if self.problem not in PROBLEMS:
            raise SpecError(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        if not self.methods:
            raise SpecError("method list is empty")
        for method in self.methods:
            if method not in ("gd", "lm", "grlm"):
                raise SpecError(f"unknown method {method!r}")
        if "gd" in self.methods and not self.eta_grid:
            raise SpecError("gd selected but eta grid is empty")
        if ("lm" in self.methods or "grlm" in self.methods) and not self.reg_c_grid:
            raise SpecError("lm/grlm selected but reg_c grid is empty")
        if "grlm" in self.methods and not self.m_list:
            raise SpecError("grlm selected but m list is empty")
        if self.problem == "logistic" and not self.data_path:
            raise SpecError("logistic problem needs a dataset path")
        if self.jobs < 1:
            raise SpecError(f"jobs must be >= 1, got {self.jobs}")


@dataclass
class RunOutcome:
    """What one grid point did: where its trace went and whether / at what
    cost it reached the tolerance."""

    method: str
    params: dict
    label: str
    trace_path: str
    converged: bool
    iterations: int
    jv_to_tol: int | None
    wall_seconds: float
    final_grad_norm: float
    error: str | None = None


@dataclass
class ExperimentResult:
    outcomes: list[RunOutcome]
    best: dict
    summary_path: str
    out_dir: str

    @property
    def failed_methods(self) -> list[str]:
        return sorted(m for m, o in self.best.items() if o is None)


def emit_trace_csv(trace: list[IterationRecord], path) -> Path:
    """Write a trace under the fixed 8-column header.

    Floats are written in their shortest round-trip decimal form and the
    snapshot flag as 0/1, so files diff cleanly and parse back exactly.
    """
    path = Path(path)
    lines = [TRACE_HEADER]
    for rec in trace:
        lines.append(
            f"{int(rec.t)},{float(rec.grad_norm)!r},{float(rec.merit)!r},"
            f"{float(rec.lambda_t)!r},{float(rec.r_t)!r},{int(rec.jv_cumulative)},"
            f"{float(rec.wall_seconds)!r},{int(rec.snapshot_refreshed)}"
        )
    try:
        path.write_text("\n".join(lines) + "\n", encoding="ascii")
    except OSError as err:
        raise OSError(f"cannot write trace to {path}: {err}") from err
    return path


def read_trace_csv(path) -> list[IterationRecord]:
    """Parse a trace file written by :func:`emit_trace_csv`.

    The extra in-memory fields (jac_norm, x) are not serialized and come
    back as their defaults.
    """
    path = Path(path)
    lines = path.read_text(encoding="ascii").splitlines()
    if not lines or lines[0] != TRACE_HEADER:
        raise ValueError(f"{path}: unexpected trace header")
    trace = []
    for line in lines[1:]:
        t, gn, merit, lam, r, jv, wall, snap = line.split(",")
        trace.append(IterationRecord(
            t=int(t), grad_norm=float(gn), merit=float(merit), lambda_t=float(lam),
            r_t=float(r), jv_cumulative=int(jv), wall_seconds=float(wall),
            snapshot_refreshed=bool(int(snap)),
        ))
    return trace


def _run_label(method: str, params: dict) -> str:
    if method == "gd":
        return f"gd_eta{params['eta']!r}"
    if method == "lm":
        return f"lm_c{params['reg_c']!r}"
    return f"grlm_c{params['reg_c']!r}_m{params['m']}"


def _param_order(method: str, params: dict) -> tuple:
    # Tie-break key: smaller parameter values win.
    if method == "gd":
        return (params["eta"],)
    if method == "lm":
        return (params["reg_c"],)
    return (params["reg_c"], params["m"])


def _build_tasks(spec: ExperimentSpec) -> list[tuple[str, dict, SolverConfig]]:
    base = dict(max_iters=spec.max_iters, tol_eps=spec.tol_eps, seed=spec.seed,
                solve_mode=spec.solve_mode)
    tasks = []
    for method in spec.methods:
        if method == "gd":
            cap = spec.gd_max_iters if spec.gd_max_iters is not None else spec.max_iters
            for eta in spec.eta_grid:
                cfg = SolverConfig(method="gd", step_eta=float(eta), **{**base, "max_iters": cap})
                tasks.append(("gd", {"eta": float(eta)}, cfg))
        elif method == "lm":
            for c in spec.reg_c_grid:
                cfg = SolverConfig(method="lm", reg_c=float(c), **base)
                tasks.append(("lm", {"reg_c": float(c)}, cfg))
        else:
            for c in spec.reg_c_grid:
                for m in spec.m_list:
                    cfg = SolverConfig(method="grlm", reg_c=float(c), m=int(m), **base)
                    tasks.append(("grlm", {"reg_c": float(c), "m": int(m)}, cfg))
    return tasks


def _make_problem(spec: ExperimentSpec, dataset: SparseDataset | None):
    # Fresh instance per run so each run owns its counters.
    if spec.problem == "heq":
        return HEquationProblem(spec.n, c_param=spec.c_param)
    return LogisticProblem(dataset, reg_lambda=spec.reg_lambda)


def initial_point(spec: ExperimentSpec, dimension: int) -> np.ndarray:
    """Shared starting point for every run of a sweep: a seeded uniform
    draw from [0, 1]^d for the H-equation, the origin for logistic."""
    if spec.problem == "heq":
        return np.random.default_rng(spec.seed).random(dimension)
    return np.zeros(dimension)


def _execute(spec: ExperimentSpec, dataset, x0, method, params, cfg) -> RunOutcome:
    problem = _make_problem(spec, dataset)
    label = _run_label(method, params)
    path = Path(spec.out_dir) / f"{label}.csv"
    error = None
    try:
        trace = run_solver(problem, cfg, x0)
    except DivergenceError as err:
        trace = err.trace
        error = str(err)
    emit_trace_csv(trace, path)
    converged = bool(trace) and error is None and trace[-1].grad_norm <= cfg.tol_eps
    return RunOutcome(
        method=method,
        params=params,
        label=label,
        trace_path=str(path),
        converged=converged,
        iterations=len(trace),
        jv_to_tol=trace[-1].jv_cumulative if converged else None,
        wall_seconds=trace[-1].wall_seconds if trace else 0.0,
        final_grad_norm=trace[-1].grad_norm if trace else math.inf,
        error=error,
    )


def _write_summary(spec: ExperimentSpec, best: dict, path: Path) -> None:
    lines = ["method,status,eta,reg_c,m,iterations,jv_to_tol,final_grad_norm,wall_seconds,trace"]
    for method in spec.methods:
        out = best[method]
        if out is None:
            lines.append(f"{method},failed,,,,,,,,")
            continue
        p = out.params
        lines.append(
            f"{method},ok,{p.get('eta', '')},{p.get('reg_c', '')},{p.get('m', '')},"
            f"{out.iterations},{out.jv_to_tol},{float(out.final_grad_norm)!r},"
            f"{float(out.wall_seconds)!r},{out.label}.csv"
        )
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run the full sweep described by ``spec``.

    Writes one trace CSV per grid point plus ``summary.csv`` in the output
    directory and returns the outcomes with the per-method winners. A
    method with no grid point reaching the tolerance maps to None in
    ``best`` (callers decide whether that is fatal). Missing dataset files
    raise FileNotFoundError; an invalid spec raises :class:`SpecError`.
    """
    spec.validate()
    dataset = None
    if spec.problem == "logistic":
        dataset = load_libsvm(spec.data_path, d=spec.dim_override)
        if dataset.n == 0:
            raise SpecError(f"dataset {spec.data_path} has no samples")
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    probe = _make_problem(spec, dataset)
    x0 = initial_point(spec, probe.dimension)

    tasks = _build_tasks(spec)
    if spec.jobs == 1:
        outcomes = [_execute(spec, dataset, x0, *task) for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=spec.jobs) as pool:
            futures = [pool.submit(_execute, spec, dataset, x0, *task) for task in tasks]
            outcomes = [f.result() for f in futures]

    best: dict = {}
    for method in spec.methods:
        winners = [o for o in outcomes if o.method == method and o.converged]
        winners.sort(key=lambda o: (o.jv_to_tol, o.wall_seconds, _param_order(method, o.params)))
        best[method] = winners[0] if winners else None

    summary_path = out_dir / "summary.csv"
    _write_summary(spec, best, summary_path)
    return ExperimentResult(outcomes=outcomes, best=best,
                            summary_path=str(summary_path), out_dir=str(out_dir))
