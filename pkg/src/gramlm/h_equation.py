"""Chandrasekhar H-equation benchmark problem.

The discretized radiative-transfer H-equation on N composite-midpoint
quadrature nodes mu_i = (i - 1/2)/N is the square system

    F_i(x) = x_i - 1 / (1 - s_i(x)),
    s_i(x) = (c / 2N) * sum_j mu_i x_j / (mu_i + mu_j),

with a physical constant c in [0, 1]. Values of c close to 1 make the
Jacobian at the solution nearly singular, which is what makes this a
standard hard benchmark for Newton-type solvers.
"""

from __future__ import annotations

import numpy as np

from .problems import NonlinearSystem, SingularEvaluationError

__all__ = ["DEFAULT_C_PARAM", "HEquationProblem", "midpoint_nodes"]

DEFAULT_C_PARAM = 1.0 - 1e-10

# Below this margin the kernel denominator 1 - s_i counts as vanished.
_SINGULAR_MARGIN = 1e-14


def midpoint_nodes(n: int) -> np.ndarray:
    """Composite-midpoint quadrature nodes (i - 1/2)/n for i = 1..n."""
    return (np.arange(1, n + 1) - 0.5) / n


class HEquationProblem(NonlinearSystem):
    """H-equation system of size N with constant ``c_param``.

    Custom quadrature nodes may be supplied via ``mu``; they must be
    strictly positive and strictly increasing. The kernel matrix
    (c / 2N) mu_i / (mu_i + mu_j) is precomputed once, so residual and
    Jacobian evaluations are dense matrix-vector work.
    """

    def __init__(self, n: int, c_param: float = DEFAULT_C_PARAM, mu=None):
        super().__init__(n)
        if not 0.0 <= c_param <= 1.0:
            raise ValueError(f"c_param must lie in [0, 1], got {c_param}")
        if mu is None:
            mu = midpoint_nodes(n)
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (n,):
            raise ValueError(f"mu must have length {n}, got shape {mu.shape}")
        if not (np.all(mu > 0.0) and np.all(np.diff(mu) > 0.0)):
            raise ValueError("quadrature nodes must be strictly positive and increasing")
        self.c_param = float(c_param)
        self.mu = mu
        self._kernel = (self.c_param / (2.0 * n)) * (mu[:, None] / (mu[:, None] + mu[None, :]))

    def _denominators(self, x: np.ndarray) -> np.ndarray:
        one_minus_s = 1.0 - self._kernel @ x
        if np.any(np.abs(one_minus_s) < _SINGULAR_MARGIN):
            raise SingularEvaluationError(
                "kernel denominator 1 - s_i vanished; the point left the model's valid region"
            )
        return one_minus_s

    def _residual(self, x: np.ndarray) -> np.ndarray:
        return x - 1.0 / self._denominators(x)

    def _jacobian(self, x: np.ndarray) -> np.ndarray:
        # entry (i, k) = delta_ik - kernel_ik / (1 - s_i)^2
        one_minus_s = self._denominators(x)
        J = -self._kernel / one_minus_s[:, None] ** 2
        J[np.diag_indices_from(J)] += 1.0
        return J
