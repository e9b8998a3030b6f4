import numpy as np
import pytest

from gramlm import NonlinearSystem, load_libsvm


class LinearSystem(NonlinearSystem):
    """F(x) = A x - b, the simplest system with a known exact Jacobian."""

    def __init__(self, A, b):
        A = np.asarray(A, dtype=float)
        super().__init__(A.shape[0])
        self._Amat = A
        self._bvec = np.asarray(b, dtype=float)

    def _residual(self, x):
        return self._Amat @ x - self._bvec

    def _jacobian(self, x):
        return self._Amat.copy()


class CubicSystem(NonlinearSystem):
    """F_i(x) = x_i^3 - 1, a smooth system that blows up under big steps."""

    def __init__(self, d):
        super().__init__(d)

    def _residual(self, x):
        return x**3 - 1.0

    def _jacobian(self, x):
        return np.diag(3.0 * x**2)


def synth_libsvm_text(n, d, seed, density=0.8):
    """LIBSVM-format text for a synthetic two-class problem: +/-1 valued
    features with random dropout, labels from a noisy linear rule."""
    rng = np.random.default_rng(seed)
    w = rng.normal(size=d) / np.sqrt(d)
    lines = []
    for _ in range(n):
        vals = rng.choice([-1.0, 1.0], size=d)
        keep = rng.random(d) < density
        a = np.where(keep, vals, 0.0)
        z = a @ w + 0.3 * rng.normal()
        b = 1 if z >= 0 else -1
        feats = " ".join(f"{j + 1}:{vals[j]:.1f}" for j in np.nonzero(keep)[0])
        lines.append(f"{b:+d} {feats}")
    return "\n".join(lines) + "\n"


def fd_gradient(fn, x, h=None):
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = 1e-6 * (1.0 + float(np.max(np.abs(x))))
    g = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return g


@pytest.fixture(scope="session")
def splice_file(tmp_path_factory):
    # Same shape as the "splice" benchmark dataset: n=1000, d=60.
    path = tmp_path_factory.mktemp("data") / "splice_synth.libsvm"
    path.write_text(synth_libsvm_text(1000, 60, seed=7))
    return path


@pytest.fixture(scope="session")
def splice_dataset(splice_file):
    return load_libsvm(splice_file, d=60)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data_small") / "small.libsvm"
    path.write_text(synth_libsvm_text(50, 8, seed=11))
    return load_libsvm(path, d=8)
