"""Small dense linear algebra and deterministic random streams.

Everything the estimation code needs from numerics: dot/axpy/norm primitives,
a Cholesky factorization with an explicit positive-definiteness guard, an SPD
solver, and a seeded random stream whose draws are reproducible across runs
and platforms for a fixed numpy version.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

Vector = np.ndarray
Matrix = np.ndarray

# Pivots at or below this fraction of the largest diagonal entry are treated
# as numerically non-positive.
PIVOT_RTOL = 1e-12

_MAX_SEED = 2**128


class NotPositiveDefinite(ValueError):
    """Raised when a matrix offered as SPD has a non-positive pivot."""


class RngStream:
    """Counter-based random stream with an explicit integer identity.

    A stream is fully determined by its seed: two streams built from the same
    seed produce the same draw sequence regardless of platform or process.
    Draws are Philox-generated; the seed is used directly as the generator key.

    Arguments
    ---------
    seed : int
        Stream identity, 0 <= seed < 2**128.
    """

    def __init__(self, seed: int):
        if not isinstance(seed, (int, np.integer)):
            raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
        if not 0 <= seed < _MAX_SEED:
            raise ValueError(f"seed out of range [0, 2**128): {seed}")
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.Philox(key=self.seed))

    def uniform01(self, size=None):
        """Uniform draws on [0, 1); scalar when size is None."""
        return self._gen.random(size)

    def standard_normal(self, size=None):
        """Standard normal draws; scalar when size is None."""
        return self._gen.standard_normal(size)

    def chi_square(self, df: float, size=None):
        """Chi-square draws with df > 0 degrees of freedom (non-integer ok)."""
        if df <= 0:
            raise ValueError(f"chi_square needs df > 0, got {df}")
        return self._gen.chisquare(df, size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed})"


def dot(x: Vector, y: Vector) -> float:
    """Inner product of two equal-length vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    return float(x @ y)


def axpy(a: float, x: Vector, y: Vector) -> Vector:
    """Return y + a*x as a new vector; neither input is modified."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    return y + a * x


def norm2(x: Vector) -> float:
    """Euclidean norm."""
    return float(np.linalg.norm(np.asarray(x, dtype=float)))


def cholesky(a: Matrix) -> Matrix:
    """Lower-triangular L with a = L @ L.T for symmetric positive definite a.

    Column-by-column factorization with an explicit pivot guard: a pivot at or
    below PIVOT_RTOL times the largest diagonal entry raises
    NotPositiveDefinite instead of propagating a sqrt of a non-positive value.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    d = a.shape[0]
    tol = PIVOT_RTOL * float(np.max(np.diag(a))) if d else 0.0
    low = np.zeros_like(a)
    for j in range(d):
        pivot = a[j, j] - low[j, :j] @ low[j, :j]
        if not pivot > tol:
            raise NotPositiveDefinite(
                f"pivot {pivot:.3e} at column {j} (tolerance {tol:.3e})"
            )
        low[j, j] = np.sqrt(pivot)
        if j + 1 < d:
            low[j + 1 :, j] = (a[j + 1 :, j] - low[j + 1 :, :j] @ low[j, :j]) / low[j, j]
    return low


def solve_spd(a: Matrix, b: Vector) -> Vector:
    """Solve a @ x = b for symmetric positive definite a via Cholesky."""
    low = cholesky(a)
    b = np.asarray(b, dtype=float)
    z = solve_triangular(low, b, lower=True)
    return solve_triangular(low.T, z, lower=False)
