"""Non-convex regularized logistic regression as a square system.

The model minimizes

    f(x) = (1/n) sum_i ln(1 + exp(-b_i a_i.x))
           + reg_lambda * sum_p x_p^2 / (1 + x_p^2)

over features a_i in R^d with labels b_i in {-1, +1}. Root finding targets
F(x) = grad f(x), so the system Jacobian is the (symmetric) Hessian of f.
The bounded penalty term is what makes f non-convex: its curvature
2 (1 - 3 x_p^2) / (1 + x_p^2)^3 turns negative for |x_p| > 1/sqrt(3).

Datasets are read from LIBSVM-format text (``label index:value ...`` with
1-based, strictly increasing indices per row).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .problems import NonlinearSystem

__all__ = [
    "LibsvmParseError",
    "LogisticProblem",
    "SparseDataset",
    "load_libsvm",
    "parse_libsvm",
]


class LibsvmParseError(ValueError):
    """Malformed LIBSVM input; messages carry the offending line number."""


@dataclass(frozen=True)
class SparseDataset:
    """Row-sparse features with +/-1 labels.

    ``rows[i]`` is a pair of aligned arrays (1-based indices, values) with
    strictly increasing indices in [1, d].
    """

    n: int
    d: int
    rows: list = field(repr=False)
    labels: np.ndarray = field(repr=False)


def parse_libsvm(lines, d: int | None = None) -> SparseDataset:
    """Parse LIBSVM-format text into a :class:`SparseDataset`.

    ``lines`` is any iterable of strings (an open file works). Blank lines
    are skipped. Labels must be -1, 0, or +1; a 0 is normalized to -1.
    ``d`` overrides the feature dimension, which otherwise becomes the
    largest index seen. Any structural problem raises
    :class:`LibsvmParseError` naming the line.
    """
    rows = []
    labels = []
    max_index = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise LibsvmParseError(f"line {lineno}: bad label {tokens[0]!r}") from None
        if label == 0.0:
            label = -1.0
        if label not in (-1.0, 1.0):
            raise LibsvmParseError(
                f"line {lineno}: label must be -1, 0, or +1, got {tokens[0]!r}"
            )
        idxs = []
        vals = []
        prev = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise LibsvmParseError(f"line {lineno}: bad feature token {tok!r}")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise LibsvmParseError(f"line {lineno}: bad feature token {tok!r}") from None
            if idx <= 0:
                raise LibsvmParseError(f"line {lineno}: feature index {idx} is not positive")
            if idx <= prev:
                raise LibsvmParseError(
                    f"line {lineno}: indices must be strictly increasing ({idx} after {prev})"
                )
            if d is not None and idx > d:
                raise LibsvmParseError(
                    f"line {lineno}: feature index {idx} exceeds dimension override {d}"
                )
            prev = idx
            idxs.append(idx)
            vals.append(val)
        max_index = max(max_index, prev)
        rows.append((np.asarray(idxs, dtype=np.int64), np.asarray(vals, dtype=float)))
        labels.append(label)
    dim = int(d) if d is not None else max_index
    return SparseDataset(n=len(rows), d=dim, rows=rows, labels=np.asarray(labels, dtype=float))


def load_libsvm(path, d: int | None = None) -> SparseDataset:
    """Read a LIBSVM-format file from disk."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_libsvm(fh, d=d)


def _sigmoid(u: np.ndarray) -> np.ndarray:
    # overflow-safe 1 / (1 + exp(-u))
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


class LogisticProblem(NonlinearSystem):
    """Gradient system of the penalized logistic loss (see module docs).

    The dataset stays row-sparse; features are densified once at
    construction since the target problems have small d, and dense algebra
    keeps evaluation order (hence traces) reproducible on a fixed build.
    """

    def __init__(self, data: SparseDataset, reg_lambda: float = 0.1):
        if data.n < 1:
            raise ValueError("dataset has no samples")
        if data.d < 1:
            raise ValueError("dataset has no features")
        if reg_lambda <= 0.0:
            raise ValueError(f"reg_lambda must be positive, got {reg_lambda}")
        super().__init__(data.d)
        self.data = data
        self.reg_lambda = float(reg_lambda)
        A = np.zeros((data.n, data.d))
        for i, (idx, val) in enumerate(data.rows):
            A[i, idx - 1] = val
        self._A = A
        self._b = np.asarray(data.labels, dtype=float)

    def _residual(self, x: np.ndarray) -> np.ndarray:
        z = self._b * (self._A @ x)
        coeff = -self._b * _sigmoid(-z) / self.data.n
        penalty_grad = 2.0 * x / (1.0 + x * x) ** 2
        return self._A.T @ coeff + self.reg_lambda * penalty_grad

    def _jacobian(self, x: np.ndarray) -> np.ndarray:
        z = self._b * (self._A @ x)
        s = _sigmoid(z)
        w = s * (1.0 - s) / self.data.n
        H = self._A.T @ (w[:, None] * self._A)
        xsq = x * x
        H[np.diag_indices_from(H)] += (
            self.reg_lambda * 2.0 * (1.0 - 3.0 * xsq) / (1.0 + xsq) ** 3
        )
        return H
