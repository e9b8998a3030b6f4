"""Shared interface for square nonlinear systems F(x) = 0.

Every problem exposes a residual F, an analytic d x d Jacobian J, the
least-squares merit phi(x) = 0.5 ||F(x)||^2, and its gradient J(x)^T F(x).
Evaluations are charged to per-problem counters so that solver benchmarks
can report Jacobian-vector-product budgets: a full Jacobian evaluation on a
d-dimensional system counts as d Jacobian-vector products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EvalCounters",
    "NonlinearSystem",
    "SingularEvaluationError",
    "finite_difference_jacobian",
]


class SingularEvaluationError(RuntimeError):
    """A problem was evaluated outside its valid region (e.g. a model
    denominator vanished). Solvers translate this into a divergence
    failure carrying the trace collected so far."""


@dataclass
class EvalCounters:
    """Evaluation bookkeeping owned by one problem instance.

    ``jv_products`` equals ``d * full_jacobian_evals`` as long as no
    partial products are ever requested (none are, in this package).
    Counters only grow; solvers take a baseline at run start and report
    deltas, so a freshly constructed problem per run keeps accounting
    exact.
    """

    residual_evals: int = 0
    full_jacobian_evals: int = 0
    jv_products: int = 0

    def charge_residual(self) -> None:
        self.residual_evals += 1

    def charge_full_jacobian(self, d: int) -> None:
        self.full_jacobian_evals += 1
        self.jv_products += d

    def reset(self) -> None:
        self.residual_evals = 0
        self.full_jacobian_evals = 0
        self.jv_products = 0


class NonlinearSystem:
    """Base class for square systems F: R^d -> R^d.

    Subclasses implement ``_residual`` and ``_jacobian`` as pure functions
    of x: calling either twice at the same point must return bit-identical
    arrays. The public wrappers validate shapes and charge the counters.

    Instances are immutable after construction except for the counters,
    so concurrent runs should each construct their own problem instance
    rather than share one.
    """

    def __init__(self, dimension: int):
        if dimension < 1:
            raise ValueError(f"dimension must be a positive integer, got {dimension}")
        self.dimension = int(dimension)
        self.counters = EvalCounters()

    # subclass surface
    def _residual(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _jacobian(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(
                f"expected a vector of length {self.dimension}, got shape {x.shape}"
            )
        return x

    def residual(self, x) -> np.ndarray:
        """F(x). Charges one residual evaluation."""
        x = self._check_point(x)
        self.counters.charge_residual()
        return self._residual(x)

    def jacobian(self, x) -> np.ndarray:
        """The d x d Jacobian of F at x.

        Charges one full Jacobian evaluation, i.e. d Jacobian-vector
        products.
        """
        x = self._check_point(x)
        self.counters.charge_full_jacobian(self.dimension)
        return self._jacobian(x)

    def merit(self, x) -> float:
        """Least-squares merit 0.5 ||F(x)||^2."""
        F = self.residual(x)
        return 0.5 * float(F @ F)

    def grad_merit(self, x) -> np.ndarray:
        """Merit gradient J(x)^T F(x).

        Charges one full Jacobian plus one residual evaluation; the
        Jacobian is materialized rather than applied matrix-free to keep
        the product accounting simple and uniform across solvers.
        """
        J = self.jacobian(x)
        F = self.residual(x)
        return J.T @ F


def finite_difference_jacobian(sys: NonlinearSystem, x, h: float | None = None) -> np.ndarray:
    """Central-difference Jacobian, the independent oracle for analytic ones.

    Column k is (F(x + h e_k) - F(x - h e_k)) / (2 h). When ``h`` is omitted
    it defaults to 1e-6 * (1 + max_i |x_i|). Charges 2 d residual
    evaluations and no Jacobian-vector products.
    """
    x = np.asarray(x, dtype=float)
    if h is None:
        h = 1e-6 * (1.0 + float(np.max(np.abs(x))))
    if h <= 0:
        raise ValueError(f"step h must be positive, got {h}")
    d = sys.dimension
    J = np.empty((d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        J[:, k] = (sys.residual(x + e) - sys.residual(x - e)) / (2.0 * h)
    return J
