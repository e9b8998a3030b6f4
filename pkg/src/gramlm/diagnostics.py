"""Independent audits of analytic Jacobians and solver traces.

``audit_jacobian`` replays a problem's analytic Jacobian against the
central-difference oracle. ``audit_trace`` replays a finished run against
the per-iteration contracts the solvers promise: the damped step-size
bound, the snapshot schedule, and the termination tolerance. Verdicts are
pure functions of the trace and config they are given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .problems import NonlinearSystem, finite_difference_jacobian
from .solvers import IterationRecord, SolverConfig

__all__ = ["AuditCheck", "AuditReport", "audit_jacobian", "audit_trace"]

PASS = "pass"
FAIL = "fail"
WARN = "warn"
SKIP = "skip"

# Floating-point slack on the hard step-size bound r_t <= lambda_t / reg_c.
STEP_BOUND_SLACK = 1e-10


@dataclass(frozen=True)
class AuditCheck:
    name: str
    status: str
    measured: float
    threshold: float
    detail: str = ""


@dataclass
class AuditReport:
    """Named checks with their measured values and thresholds, so every
    verdict can be reproduced from the report alone."""

    trace_id: str
    checks: list[AuditCheck] = field(default_factory=list)

    def add(self, name, status, measured, threshold, detail=""):
        self.checks.append(AuditCheck(name, status, float(measured), float(threshold), detail))

    @property
    def failures(self) -> list[AuditCheck]:
        return [c for c in self.checks if c.status == FAIL]

    @property
    def passed(self) -> bool:
        return not self.failures

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            line = f"{self.trace_id}: {c.name}: {c.status.upper()} measured={c.measured:.6g} threshold={c.threshold:.6g}"
            if c.detail:
                line += f" ({c.detail})"
            out.append(line)
        return out


def audit_jacobian(sys: NonlinearSystem, points, tol: float) -> AuditReport:
    """Compare the analytic Jacobian with central differences at each point.

    The measured value per point is the relative Frobenius gap
    ||J_analytic - J_fd||_F / ||J_analytic||_F (absolute when the analytic
    Jacobian is zero). Evaluation errors propagate, annotated with the
    point index where Python supports it.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    report = AuditReport(trace_id=f"jacobian:{type(sys).__name__}")
    for i, p in enumerate(points):
        try:
            analytic = sys.jacobian(p)
            fd = finite_difference_jacobian(sys, p)
        except Exception as err:
            if hasattr(err, "add_note"):
                err.add_note(f"while auditing Jacobian at point {i}")
            raise
        scale = float(np.linalg.norm(analytic))
        gap = float(np.linalg.norm(analytic - fd)) / (scale if scale > 0.0 else 1.0)
        report.add(f"fd_gap_point_{i}", PASS if gap <= tol else FAIL, gap, tol)
    return report


def audit_trace(trace: list[IterationRecord], config: SolverConfig,
                trace_id: str = "trace") -> AuditReport:
    """Check a run trace against the solver's per-iteration contracts.

    For damped methods (lm, grlm): the hard upper bound
    r_t <= lambda_t / reg_c (+ slack) on every stepping iteration, the
    snapshot refresh schedule t mod m == 0 (m treated as 1 for lm), and,
    warn-only, the lower bound lambda_t^2 / (reg_c (L^2 + lambda_t)) <= r_t
    with L taken as the running max of snapshot spectral norms. The true
    bound holds for a global Jacobian-norm constant no finite run can
    observe, so a shortfall is reported as WARN, never FAIL. Traces without
    Jacobian norms (direct solve mode, CSV round trips) skip it.

    For gd the damping checks are skipped. Every audit ends with the
    termination check: a run that stopped before the iteration cap must
    have met the tolerance.
    """
    report = AuditReport(trace_id=trace_id)
    if not trace:
        report.add("nonempty_trace", FAIL, 0.0, 1.0, "empty trace")
        return report
    last = trace[-1]
    converged = last.grad_norm <= config.tol_eps
    stepping = trace[:-1] if converged else list(trace)

    if config.method == "gd":
        report.add("step_upper_bound", SKIP, math.nan, math.nan, "no damping in gd")
        report.add("snapshot_schedule", SKIP, math.nan, math.nan, "no snapshots in gd")
        report.add("step_lower_bound", SKIP, math.nan, math.nan, "no damping in gd")
    else:
        worst_excess = -math.inf
        for rec in stepping:
            worst_excess = max(worst_excess, rec.r_t - rec.lambda_t / config.reg_c)
        report.add(
            "step_upper_bound",
            PASS if worst_excess <= STEP_BOUND_SLACK else FAIL,
            worst_excess if stepping else 0.0,
            STEP_BOUND_SLACK,
            "max over t of r_t - lambda_t/reg_c",
        )

        period = 1 if config.method == "lm" else config.m
        bad = [rec.t for rec in stepping if rec.snapshot_refreshed != (rec.t % period == 0)]
        report.add(
            "snapshot_schedule",
            PASS if not bad else FAIL,
            len(bad),
            0.0,
            f"first mismatches at t={bad[:5]}" if bad else f"period {period}",
        )

        if any(math.isfinite(rec.jac_norm) for rec in stepping):
            running_max = 0.0
            worst_short = math.inf
            for rec in stepping:
                if math.isfinite(rec.jac_norm):
                    running_max = max(running_max, rec.jac_norm)
                if rec.lambda_t > 0.0 and running_max > 0.0:
                    bound = rec.lambda_t**2 / (config.reg_c * (running_max**2 + rec.lambda_t))
                    worst_short = min(worst_short, rec.r_t - bound)
            report.add(
                "step_lower_bound",
                PASS if worst_short >= -STEP_BOUND_SLACK else WARN,
                worst_short if worst_short < math.inf else 0.0,
                -STEP_BOUND_SLACK,
                "surrogate Jacobian-norm bound, warn only",
            )
        else:
            report.add("step_lower_bound", SKIP, math.nan, math.nan,
                       "no Jacobian norms in trace")

    if len(trace) < config.max_iters:
        report.add("termination", PASS if converged else FAIL, last.grad_norm,
                   config.tol_eps, "early stop must meet the tolerance")
    else:
        report.add("termination", PASS, last.grad_norm, config.tol_eps,
                   "ran to the iteration cap")
    return report
