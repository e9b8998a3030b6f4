"""Solvers and benchmarks for square nonlinear systems F(x) = 0."""

from .diagnostics import AuditCheck, AuditReport, audit_jacobian, audit_trace
from .h_equation import DEFAULT_C_PARAM, HEquationProblem, midpoint_nodes
from .harness import (
    ExperimentResult,
    ExperimentSpec,
    RunOutcome,
    SpecError,
    emit_trace_csv,
    read_trace_csv,
    run_experiment,
)
from .logistic import (
    LibsvmParseError,
    LogisticProblem,
    SparseDataset,
    load_libsvm,
    parse_libsvm,
)
from .problems import (
    EvalCounters,
    NonlinearSystem,
    SingularEvaluationError,
    finite_difference_jacobian,
)
from .solvers import (
    DivergenceError,
    IterationRecord,
    SnapshotFactorization,
    SolverConfig,
    grlm_step,
    lambda_reg,
    refresh_snapshot,
    run_gd,
    run_grlm,
    run_lm,
    run_solver,
    snapshot_index,
)

__version__ = "0.1.0"
