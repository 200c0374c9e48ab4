"""Synthetic data model: covariates, noise families, ground truth, scales.

Observations follow y = <x, beta*> + xi where xi is raw family noise
minus its tau-quantile.  The shift makes beta* the population minimizer
of the check loss at level tau, so no intercept column is needed and
estimation error is plain distance to beta*.  All densities and bounds
below refer to the shifted noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from .model import BatchData, Observation, QuantileLevel, _tau
from .numkit import Matrix, RngStream, Vector, cholesky

GAUSSIAN = "gaussian"
STUDENT_T = "student_t"

IDENTITY = "identity"
DIAGONAL = "diagonal"
FULL = "full"

RANDOM_UNIT = "random_unit"
ALL_ONES = "all_ones"

DENSITY_GRID_POINTS = 10_000


@dataclass(frozen=True)
class NoiseSpec:
    """Noise family, already tied to a quantile level via its shift.

    ``shift`` is the tau-quantile of the raw distribution; it is derived
    at construction and subtracted from every draw.  Student-t requires
    nu > 1 so that the mean absolute deviation is finite.
    """

    family: str
    tau: float = 0.5
    scale: float = 1.0
    nu: float | None = None
    shift: float = field(init=False)

    def __post_init__(self):
        if self.family not in (GAUSSIAN, STUDENT_T):
            raise ValueError(f"unknown noise family {self.family!r}")
        if not self.scale > 0.0:
            raise ValueError(f"noise scale must be positive, got {self.scale!r}")
        if self.family == STUDENT_T:
            if self.nu is None or not self.nu > 1.0:
                raise ValueError(f"student_t noise needs nu > 1, got {self.nu!r}")
        elif self.nu is not None:
            raise ValueError("nu is only meaningful for student_t noise")
        tau = QuantileLevel(self.tau).tau
        object.__setattr__(self, "tau", tau)
        object.__setattr__(
            self, "shift", tau_shift(self.family, tau, self.scale, self.nu)
        )


def tau_shift(family: str, tau, scale: float = 1.0, nu: float | None = None) -> float:
    """tau-quantile of the raw (unshifted) noise distribution."""
    tau = _tau(tau)
    if family == GAUSSIAN:
        return float(stats.norm.ppf(tau, scale=scale))
    if family == STUDENT_T:
        if nu is None or not nu > 1.0:
            raise ValueError(f"student_t noise needs nu > 1, got {nu!r}")
        return float(stats.t.ppf(tau, nu, scale=scale))
    raise ValueError(f"unknown noise family {family!r}")


def density(noise: NoiseSpec, z):
    """Density of the shifted noise at z (raw density at z + shift)."""
    raw = np.asarray(z, dtype=float) + noise.shift
    if noise.family == GAUSSIAN:
        out = stats.norm.pdf(raw, scale=noise.scale)
    else:
        out = stats.t.pdf(raw, noise.nu, scale=noise.scale)
    if np.ndim(z) == 0:
        return float(out)
    return out


def mean_abs(noise: NoiseSpec) -> float:
    """gamma = E|xi| of the shifted noise.

    Gaussian: with c the standard normal tau-quantile,
        scale * (2 phi(c) + c (2 Phi(c) - 1)).
    Student-t: with q0 the standard t quantile and f its density,
        scale * (q0 (2 tau - 1) + 2 (nu + q0^2) / (nu - 1) * f(q0)),
    using int_q^inf x f(x) dx = (nu + q^2) / (nu - 1) * f(q).
    """
    tau = noise.tau
    if noise.family == GAUSSIAN:
        c = float(stats.norm.ppf(tau))
        val = 2.0 * stats.norm.pdf(c) + c * (2.0 * stats.norm.cdf(c) - 1.0)
        return noise.scale * float(val)
    q0 = float(stats.t.ppf(tau, noise.nu))
    tail = 2.0 * (noise.nu + q0 * q0) / (noise.nu - 1.0) * stats.t.pdf(q0, noise.nu)
    return noise.scale * float(q0 * (2.0 * tau - 1.0) + tail)


class DensityBounds(NamedTuple):
    b0: float  # 1 / inf density over the phase-boundary interval
    b1: float  # 1 / sup density


def density_bounds(
    noise: NoiseSpec,
    c_l: float = 1.0,
    c_u: float = 1.0,
    grid_points: int = DENSITY_GRID_POINTS,
) -> DensityBounds:
    """Reciprocal density bounds of the shifted noise.

    b1 inverts the global supremum, attained at the raw mode for both
    families.  b0 inverts the infimum over |z| <= 8 sqrt(c_u/c_l) gamma,
    evaluated on a grid that includes both endpoints; with monotone
    tails the true infimum sits at an endpoint, so the grid is exact up
    to the endpoint values themselves.
    """
    if not 0.0 < c_l <= c_u:
        raise ValueError(f"need 0 < c_l <= c_u, got c_l={c_l!r} c_u={c_u!r}")
    radius = 8.0 * np.sqrt(c_u / c_l) * mean_abs(noise)
    grid = np.linspace(-radius, radius, max(int(grid_points), 2))
    vals = density(noise, grid)
    sup = density(noise, -noise.shift)
    inf = float(np.min(vals))
    if inf <= 0.0:
        raise ValueError(
            f"noise density underflows on |z| <= {radius:.6g}; "
            "b0 would overflow"
        )
    return DensityBounds(b0=1.0 / inf, b1=1.0 / sup)


@dataclass(frozen=True)
class ScaleConstants:
    """The noise-side calibration constants consumed by schedules."""

    gamma: float
    b0: float
    b1: float

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma!r}")
        if not self.b0 >= self.b1 > 0.0:
            raise ValueError(
                f"need b0 >= b1 > 0, got b0={self.b0!r} b1={self.b1!r}"
            )


def scale_constants(noise: NoiseSpec, c_l: float = 1.0, c_u: float = 1.0) -> ScaleConstants:
    b0, b1 = density_bounds(noise, c_l, c_u)
    return ScaleConstants(gamma=mean_abs(noise), b0=b0, b1=b1)


@dataclass(frozen=True)
class CovariateSpec:
    """Covariates x = L z with z standard normal and L L^T = Sigma.

    kind selects Sigma: identity (default), a positive diagonal, or a
    full SPD matrix.  cl and cu are the exact extreme eigenvalues,
    cached together with the Cholesky factor at construction.
    """

    dim: int
    kind: str = IDENTITY
    sigma: np.ndarray | None = None
    factor: np.ndarray | None = field(init=False, default=None)
    cl: float = field(init=False, default=1.0)
    cu: float = field(init=False, default=1.0)

    def __post_init__(self):
        if not (isinstance(self.dim, (int, np.integer)) and self.dim >= 1):
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        if self.kind == IDENTITY:
            if self.sigma is not None:
                raise ValueError("identity covariance takes no sigma argument")
            return
        if self.kind == DIAGONAL:
            vals = np.asarray(self.sigma, dtype=float)
            if vals.shape != (self.dim,) or not (vals > 0.0).all():
                raise ValueError("diagonal covariance needs dim positive entries")
            object.__setattr__(self, "sigma", vals)
            object.__setattr__(self, "factor", np.sqrt(vals))
            object.__setattr__(self, "cl", float(vals.min()))
            object.__setattr__(self, "cu", float(vals.max()))
            return
        if self.kind == FULL:
            mat = np.asarray(self.sigma, dtype=float)
            if mat.shape != (self.dim, self.dim):
                raise ValueError("full covariance needs a dim x dim matrix")
            if not np.allclose(mat, mat.T, rtol=1e-10, atol=1e-12):
                raise ValueError("full covariance must be symmetric")
            low = cholesky(mat)  # rejects non-SPD with a pivot diagnostic
            eigs = np.linalg.eigvalsh(mat)
            object.__setattr__(self, "sigma", mat)
            object.__setattr__(self, "factor", low)
            object.__setattr__(self, "cl", float(eigs[0]))
            object.__setattr__(self, "cu", float(eigs[-1]))
            return
        raise ValueError(f"unknown covariance kind {self.kind!r}")

    def sample(self, rng: RngStream, n: int) -> Matrix:
        z = rng.standard_normal((int(n), self.dim))
        if self.kind == IDENTITY:
            return z
        if self.kind == DIAGONAL:
            return z * self.factor
        return z @ self.factor.T


@dataclass(frozen=True)
class GroundTruth:
    beta_star: Vector
    snr: float

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.beta_star))


def make_truth(
    cov: CovariateSpec,
    snr: float,
    direction: str,
    gamma: float,
    rng: RngStream | None,
) -> GroundTruth:
    """Ground truth with norm snr * gamma.

    random_unit normalizes a standard normal draw; all_ones spreads the
    norm evenly over coordinates.  The norm convention makes snr the
    initial relative distance of a zero start, in noise units.
    """
    if not snr > 0.0:
        raise ValueError(f"snr must be positive, got {snr!r}")
    if not gamma > 0.0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    target = snr * gamma
    if direction == ALL_ONES:
        beta = np.full(cov.dim, target / np.sqrt(cov.dim))
    elif direction == RANDOM_UNIT:
        z = rng.standard_normal(cov.dim)
        nz = float(np.linalg.norm(z))
        if nz < 1e-12:
            z = np.zeros(cov.dim)
            z[0] = 1.0
            nz = 1.0
        beta = (target / nz) * z
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return GroundTruth(beta_star=beta, snr=float(snr))


def sample_noise(noise: NoiseSpec, rng: RngStream, size=None):
    """Shifted noise draws.  Student-t is normal / sqrt(chi2(nu)/nu).

    Draw order (normals first, then chi-squares) is part of the
    reproducibility contract.
    """
    z = rng.standard_normal(size)
    if noise.family == GAUSSIAN:
        return noise.scale * z - noise.shift
    v = rng.chi_square(noise.nu, size)
    return noise.scale * z / np.sqrt(v / noise.nu) - noise.shift


def sample_observation(
    cov: CovariateSpec, truth: GroundTruth, noise: NoiseSpec, rng: RngStream
) -> Observation:
    """One observation; x is drawn before the noise."""
    x = cov.sample(rng, 1)[0]
    xi = float(sample_noise(noise, rng))
    return Observation(x=x, y=float(x @ truth.beta_star) + xi)


def sample_batch(
    cov: CovariateSpec,
    truth: GroundTruth,
    noise: NoiseSpec,
    rng: RngStream,
    n: int,
) -> BatchData:
    """n observations in one vectorized draw: all xs first, then noise."""
    if not n >= 1:
        raise ValueError(f"need n >= 1, got {n!r}")
    xs = cov.sample(rng, n)
    ys = xs @ truth.beta_star + sample_noise(noise, rng, int(n))
    return BatchData(xs=xs, ys=ys)


def gen_batches(cov, truth, noise, batch_sizes, rng):
    """Lazily yield BatchData with the given sizes, in order."""
    for n in batch_sizes:
        yield sample_batch(cov, truth, noise, rng, int(n))
