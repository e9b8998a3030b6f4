"""Solvers for square nonlinear systems F(x) = 0.

All three methods iterate on the merit function phi(x) = 0.5 ||F(x)||^2
and stop once the stationarity measure ||J(x)^T F(x)|| drops to the
configured tolerance:

* ``run_gd``   -- gradient descent, x <- x - eta J^T F.
* ``run_lm``   -- damped Gauss-Newton with gradient-coupled damping: every
  iteration rebuilds the Gram matrix J^T J and solves
  (J^T J + lambda I) s = J^T F with lambda = sqrt(reg_c ||J^T F||).
* ``run_grlm`` -- the Gram-reused variant: the Gram matrix, held as an SVD
  of the Jacobian, is refreshed only every ``m`` iterations at a snapshot
  point and reused in between. With the factorization in hand each step
  costs O(d^2) instead of the O(d^3) refactorization the plain method pays,
  and ``m = 1`` reproduces ``run_lm`` exactly.

Evaluation accounting is uniform and literal: the gradient J(x_t)^T F(x_t)
is obtained by materializing the full Jacobian, so every iteration of every
method charges d Jacobian-vector products for it, and each Gram/SVD
(re)build charges d more. Summation orders are fixed so that repeated runs
of the same configuration are bit-identical.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .problems import NonlinearSystem, SingularEvaluationError

__all__ = [
    "DivergenceError",
    "IterationRecord",
    "SnapshotFactorization",
    "SolverConfig",
    "grlm_step",
    "lambda_reg",
    "refresh_snapshot",
    "run_gd",
    "run_grlm",
    "run_lm",
    "run_solver",
    "snapshot_index",
]

METHODS = ("gd", "lm", "grlm")
SOLVE_MODES = ("svd", "direct")

# Iterates beyond this norm count as diverged even while still finite.
_DIVERGENCE_NORM = 1e100


class DivergenceError(RuntimeError):
    """A run produced a non-finite or unbounded iterate, or evaluated the
    problem outside its valid region. ``trace`` holds the records collected
    before the failure."""

    def __init__(self, message: str, trace: list):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class SolverConfig:
    """Method selection and stopping policy for one run.

    ``solve_mode`` picks how the damped system (G + lambda I) s = g is
    solved: ``"svd"`` reuses the snapshot factorization (the cheap path),
    ``"direct"`` factors the dense Gram system on every step. When left as
    None it defaults to ``"direct"`` for lm and ``"svd"`` otherwise.
    ``seed`` is consumed by initial-point draws in the harness; the solver
    loops themselves are deterministic.
    """

    method: str
    reg_c: float = 1.0
    step_eta: float = 0.1
    m: int = 1
    max_iters: int = 1000
    tol_eps: float = 1e-8
    seed: int = 0
    solve_mode: str | None = None
    record_iterates: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        mode = self.solve_mode
        if mode == "svd_reuse":
            mode = "svd"
        if mode is None:
            mode = "direct" if self.method == "lm" else "svd"
        if mode not in SOLVE_MODES:
            raise ValueError(f"solve_mode must be one of {SOLVE_MODES}, got {self.solve_mode!r}")
        object.__setattr__(self, "solve_mode", mode)
        if self.reg_c <= 0.0:
            raise ValueError(f"reg_c must be positive, got {self.reg_c}")
        if self.step_eta <= 0.0:
            raise ValueError(f"step_eta must be positive, got {self.step_eta}")
        if self.m < 1:
            raise ValueError(f"snapshot period m must be >= 1, got {self.m}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol_eps <= 0.0:
            raise ValueError(f"tol_eps must be positive, got {self.tol_eps}")


@dataclass(frozen=True)
class SnapshotFactorization:
    """SVD pieces of the Jacobian at a snapshot point.

    Only the singular values and the right singular vectors are kept; the
    left factor plays no role in the damped step. ``snapshot_index`` is the
    iteration at which the factorization was built.
    """

    sigma: np.ndarray
    V: np.ndarray
    snapshot_index: int


@dataclass
class IterationRecord:
    """Per-iteration telemetry emitted by every solver.

    ``jac_norm`` is the spectral norm of the Jacobian active in the current
    snapshot (available in svd mode, NaN otherwise); ``x`` is the iterate at
    the start of the iteration, kept only when the config asks for it.
    Neither extra field is part of the CSV trace schema.
    """

    t: int
    grad_norm: float
    merit: float
    lambda_t: float
    r_t: float
    jv_cumulative: int
    wall_seconds: float
    snapshot_refreshed: bool
    jac_norm: float = math.nan
    x: np.ndarray | None = None


def snapshot_index(t: int, m: int) -> int:
    """Latest snapshot iteration not later than t: m * floor(t / m)."""
    if m < 1:
        raise ValueError(f"snapshot period m must be >= 1, got {m}")
    if t < 0:
        raise ValueError(f"iteration index must be nonnegative, got {t}")
    return m * (t // m)


def lambda_reg(g, reg_c: float) -> float:
    """Gradient-coupled damping sqrt(reg_c * ||g||).

    Zero exactly at a stationary point, so the damped matrix stays
    invertible whenever there is still progress to make.
    """
    if reg_c <= 0.0:
        raise ValueError(f"reg_c must be positive, got {reg_c}")
    return math.sqrt(reg_c * float(np.linalg.norm(g)))


def refresh_snapshot(sys: NonlinearSystem, z, index: int = 0) -> SnapshotFactorization:
    """Factor J(z) for reuse. Charges one full Jacobian evaluation."""
    J = sys.jacobian(z)
    try:
        _, sigma, vt = np.linalg.svd(J)
    except np.linalg.LinAlgError as err:
        raise RuntimeError(f"SVD of the snapshot Jacobian failed: {err}") from err
    return SnapshotFactorization(sigma=sigma, V=vt.T, snapshot_index=index)


def grlm_step(x, snap: SnapshotFactorization, g, lam: float):
    """One damped step from the snapshot factorization:

        x - V diag(1/(sigma_i^2 + lam)) V^T g

    which solves (J(z)^T J(z) + lam I) s = g in O(d^2). Well defined for
    any lam > 0 since sigma_i^2 + lam > 0.
    """
    w = snap.V.T @ g
    return x - snap.V @ (w / (snap.sigma**2 + lam))


def _check_x0(sys: NonlinearSystem, x0) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (sys.dimension,):
        raise ValueError(
            f"x0 must be a vector of length {sys.dimension}, got shape {x0.shape}"
        )
    return x0.copy()


def _grad_state(sys, x, trace, t):
    # One full Jacobian charge plus one residual charge per iteration.
    try:
        J = sys.jacobian(x)
        F = sys.residual(x)
    except SingularEvaluationError as err:
        raise DivergenceError(f"evaluation failed at iteration {t}: {err}", trace) from err
    g = J.T @ F
    grad_norm = float(np.linalg.norm(g))
    merit = 0.5 * float(F @ F)
    if not math.isfinite(grad_norm):
        raise DivergenceError(f"non-finite gradient at iteration {t}", trace)
    return g, grad_norm, merit


def _guard_step(x_next, trace, t):
    if not np.all(np.isfinite(x_next)) or float(np.linalg.norm(x_next)) > _DIVERGENCE_NORM:
        raise DivergenceError(f"iterate diverged at iteration {t}", trace)


def _make_record(config, sys, jv_base, start, t, grad_norm, merit, lam, r, refreshed, jac_norm, x):
    return IterationRecord(
        t=t,
        grad_norm=grad_norm,
        merit=merit,
        lambda_t=lam,
        r_t=r,
        jv_cumulative=sys.counters.jv_products - jv_base,
        wall_seconds=time.perf_counter() - start,
        snapshot_refreshed=refreshed,
        jac_norm=jac_norm,
        x=x.copy() if config.record_iterates else None,
    )


def run_grlm(sys: NonlinearSystem, config: SolverConfig, x0) -> list[IterationRecord]:
    """Snapshot-reusing damped iteration.

    Per iteration t: evaluate g_t = J(x_t)^T F(x_t) and stop if its norm is
    within tolerance; otherwise, when t is a multiple of m, refresh the
    snapshot at the current point (the stationarity check comes first so a
    converged point never pays for a factorization); then step with damping
    lambda_t = sqrt(reg_c ||g_t||). Returns one record per iteration; the
    final record of a converged run satisfies the tolerance and logs no
    step. Raises :class:`DivergenceError` on non-finite iterates, with the
    partial trace attached.
    """
    if config.method != "grlm":
        raise ValueError(f"config.method is {config.method!r}, expected 'grlm'")
    x = _check_x0(sys, x0)
    trace: list[IterationRecord] = []
    jv_base = sys.counters.jv_products
    start = time.perf_counter()
    eye = np.eye(sys.dimension)
    snap = None
    gram = None
    jac_norm = math.nan
    for t in range(config.max_iters):
        g, grad_norm, merit = _grad_state(sys, x, trace, t)
        if grad_norm <= config.tol_eps:
            trace.append(_make_record(config, sys, jv_base, start, t, grad_norm, merit,
                                      lambda_reg(g, config.reg_c), 0.0, False, jac_norm, x))
            break
        refreshed = t % config.m == 0
        if refreshed:
            if config.solve_mode == "svd":
                snap = refresh_snapshot(sys, x, index=t)
                jac_norm = float(snap.sigma[0])
            else:
                try:
                    J_z = sys.jacobian(x)
                except SingularEvaluationError as err:
                    raise DivergenceError(
                        f"evaluation failed at iteration {t}: {err}", trace) from err
                gram = J_z.T @ J_z
        lam = lambda_reg(g, config.reg_c)
        if config.solve_mode == "svd":
            x_next = grlm_step(x, snap, g, lam)
        else:
            x_next = x - np.linalg.solve(gram + lam * eye, g)
        r = float(np.linalg.norm(x_next - x))
        trace.append(_make_record(config, sys, jv_base, start, t, grad_norm, merit,
                                  lam, r, refreshed, jac_norm, x))
        _guard_step(x_next, trace, t)
        x = x_next
    return trace


def run_lm(sys: NonlinearSystem, config: SolverConfig, x0) -> list[IterationRecord]:
    """Damped Gauss-Newton iteration with a fresh Gram matrix every step.

    Identical in exact arithmetic (and, with a fixed solve_mode, in
    floating point) to ``run_grlm`` with m = 1; kept as an independent loop
    so the degenerate snapshot schedule has something to be checked
    against. The default solve_mode is "direct" since a factorization that
    is never reused has no reason to be an SVD.
    """
    if config.method != "lm":
        raise ValueError(f"config.method is {config.method!r}, expected 'lm'")
    x = _check_x0(sys, x0)
    trace: list[IterationRecord] = []
    jv_base = sys.counters.jv_products
    start = time.perf_counter()
    eye = np.eye(sys.dimension)
    jac_norm = math.nan
    for t in range(config.max_iters):
        g, grad_norm, merit = _grad_state(sys, x, trace, t)
        if grad_norm <= config.tol_eps:
            trace.append(_make_record(config, sys, jv_base, start, t, grad_norm, merit,
                                      lambda_reg(g, config.reg_c), 0.0, False, jac_norm, x))
            break
        lam = lambda_reg(g, config.reg_c)
        if config.solve_mode == "svd":
            snap = refresh_snapshot(sys, x, index=t)
            jac_norm = float(snap.sigma[0])
            x_next = grlm_step(x, snap, g, lam)
        else:
            try:
                J_z = sys.jacobian(x)
            except SingularEvaluationError as err:
                raise DivergenceError(
                    f"evaluation failed at iteration {t}: {err}", trace) from err
            gram = J_z.T @ J_z
            x_next = x - np.linalg.solve(gram + lam * eye, g)
        r = float(np.linalg.norm(x_next - x))
        trace.append(_make_record(config, sys, jv_base, start, t, grad_norm, merit,
                                  lam, r, True, jac_norm, x))
        _guard_step(x_next, trace, t)
        x = x_next
    return trace


def run_gd(sys: NonlinearSystem, config: SolverConfig, x0) -> list[IterationRecord]:
    """Gradient descent on the merit function: x <- x - eta J^T F.

    Records log lambda_t = 0 and never flag a snapshot. Stopping, record,
    and divergence semantics match the damped methods.
    """
    if config.method != "gd":
        raise ValueError(f"config.method is {config.method!r}, expected 'gd'")
    x = _check_x0(sys, x0)
    trace: list[IterationRecord] = []
    jv_base = sys.counters.jv_products
    start = time.perf_counter()
    for t in range(config.max_iters):
        g, grad_norm, merit = _grad_state(sys, x, trace, t)
        if grad_norm <= config.tol_eps:
            trace.append(_make_record(config, sys, jv_base, start, t, grad_norm, merit,
                                      0.0, 0.0, False, math.nan, x))
            break
        x_next = x - config.step_eta * g
        r = float(np.linalg.norm(x_next - x))
        trace.append(_make_record(config, sys, jv_base, start, t, grad_norm, merit,
                                  0.0, r, False, math.nan, x))
        _guard_step(x_next, trace, t)
        x = x_next
    return trace


_RUNNERS = {"gd": run_gd, "lm": run_lm, "grlm": run_grlm}


def run_solver(sys: NonlinearSystem, config: SolverConfig, x0) -> list[IterationRecord]:
    """Dispatch to the runner selected by ``config.method``."""
    return _RUNNERS[config.method](sys, config, x0)
