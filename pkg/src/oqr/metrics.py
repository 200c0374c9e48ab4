"""Error and regret accounting, risk oracles, and curve-fit diagnostics.

Regret uses raw (possibly negative) per-step increments; the population
quantity is an expectation, so averaging raw cumulative regret across
replications is the unbiased estimator and clipping would skew it.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .datagen import CovariateSpec, GroundTruth, NoiseSpec, sample_batch
from .model import BatchData, check_loss, excess_loss
from .numkit import RngStream, Vector


@dataclass(frozen=True)
class TrajectoryRecord:
    """Per-step telemetry of one trajectory, stored as parallel arrays.

    Row 0 is the initialization; row t holds the state after step t-1
    (its iterate's error, the stepsize and phase that step used, and
    cumulative regret over steps before t).  A diverged trajectory
    repeats its last finite error with diverged=True from the failing
    step onward.
    """

    t: np.ndarray
    rel_err: np.ndarray
    eta: np.ndarray
    phase: tuple[str, ...]
    regret_cum: np.ndarray
    diverged: np.ndarray

    def __post_init__(self):
        n = len(self.t)
        for name in ("rel_err", "eta", "regret_cum", "diverged"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name} has mismatched length")
        if len(self.phase) != n:
            raise ValueError("column phase has mismatched length")
        if n == 0 or self.t[0] != 0 or (np.diff(self.t) != 1).any():
            raise ValueError("t must run 0, 1, 2, ... from the initialization row")

    @property
    def rows(self):
        return list(
            zip(self.t, self.rel_err, self.eta, self.phase, self.regret_cum, self.diverged)
        )

    @property
    def final_rel_err(self) -> float:
        return float(self.rel_err[-1])

    @property
    def ever_diverged(self) -> bool:
        return bool(self.diverged.any())


@dataclass(frozen=True)
class EnsembleSummary:
    """Per-time aggregates across replications at thinned time points."""

    t: np.ndarray
    rel_err_mean: np.ndarray
    rel_err_median: np.ndarray
    rel_err_q25: np.ndarray
    rel_err_q75: np.ndarray
    eta: np.ndarray
    phase: tuple[str, ...]
    regret_mean: np.ndarray
    diverged_frac: np.ndarray


def relative_error(beta: Vector, beta_star: Vector) -> float:
    """||beta - beta*|| / ||beta*||."""
    denom = float(np.linalg.norm(beta_star))
    if denom <= 0.0:
        raise ValueError("relative error is undefined for a zero ground truth")
    return float(np.linalg.norm(beta - beta_star)) / denom


def regret_increment(level, data_t: BatchData, beta_t: Vector, beta_star: Vector) -> float:
    """Excess empirical loss of beta_t over beta_star on the step's own data.

    One-sample steps pass a batch of one; batch steps pass the batch, so
    the increment is the batch mean, keeping per-step scales comparable
    across modes.
    """
    return excess_loss(level, data_t, beta_t, beta_star)


def mc_excess_risk(
    level,
    beta: Vector,
    truth: GroundTruth,
    cov: CovariateSpec,
    noise: NoiseSpec,
    n: int,
    rng: RngStream,
) -> tuple[float, float]:
    """Mean and standard error of f(beta) - f(beta*) over n fresh draws."""
    if n < 100:
        raise ValueError(f"need n >= 100 for a usable standard error, got {n!r}")
    batch = sample_batch(cov, truth, noise, rng, n)
    vals = check_loss(level, batch.ys - batch.xs @ beta) - check_loss(
        level, batch.ys - batch.xs @ truth.beta_star
    )
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n))


def gaussian_excess_risk_closed_form(delta_norm: float, sigma: float) -> float:
    """Population excess absolute-loss risk at tau = 1/2, identity design.

    With D = ||beta - beta*|| and Gaussian noise, the residual at beta is
    N(0, D^2 + sigma^2), so E|resid| - E|noise| collapses to
    sqrt(2/pi) * D^2 / (sqrt(D^2 + sigma^2) + sigma).  Absolute loss is
    twice the tau=1/2 check loss.
    """
    if delta_norm < 0.0 or sigma < 0.0:
        raise ValueError("delta_norm and sigma must be nonnegative")
    if delta_norm == 0.0:
        return 0.0
    d2 = delta_norm * delta_norm
    return np.sqrt(2.0 / np.pi) * d2 / (np.sqrt(d2 + sigma * sigma) + sigma)


_PHASE_TIEBREAK = ("one", "two", "three", "offline")


def _modal(labels) -> str:
    counts = Counter(labels)

    def order(item):
        label, cnt = item
        pos = _PHASE_TIEBREAK.index(label) if label in _PHASE_TIEBREAK else len(_PHASE_TIEBREAK)
        return (-cnt, pos, label)

    return sorted(counts.items(), key=order)[0][0]


def summarize_ensemble(records, thin: int = 1) -> EnsembleSummary:
    """Aggregate replications at time points t = 0, thin, 2*thin, ...

    Relative error gets mean/median/quartiles; eta is averaged; phase is
    the modal label; regret is averaged; diverged becomes a fraction.
    """
    records = list(records)
    if not records:
        raise ValueError("empty ensemble")
    if thin < 1:
        raise ValueError(f"thin must be >= 1, got {thin!r}")
    length = len(records[0].t)
    for rec in records[1:]:
        if len(rec.t) != length:
            raise ValueError("records have different lengths")
    idx = np.arange(0, length, thin)
    rel = np.stack([rec.rel_err[idx] for rec in records])
    eta = np.stack([rec.eta[idx] for rec in records])
    regret = np.stack([rec.regret_cum[idx] for rec in records])
    div = np.stack([rec.diverged[idx] for rec in records])
    phases = tuple(
        _modal([rec.phase[i] for rec in records]) for i in idx
    )
    return EnsembleSummary(
        t=records[0].t[idx].copy(),
        rel_err_mean=rel.mean(axis=0),
        rel_err_median=np.median(rel, axis=0),
        rel_err_q25=np.percentile(rel, 25, axis=0),
        rel_err_q75=np.percentile(rel, 75, axis=0),
        eta=eta.mean(axis=0),
        phase=phases,
        regret_mean=regret.mean(axis=0),
        diverged_frac=div.mean(axis=0),
    )


def fit_log_regret(t, regret) -> tuple[float, float, float]:
    """Least-squares fit of regret ~ b + log(1 + t/a).

    Golden-section search on a over [1, 10*max(t)] with the closed-form
    b = mean(regret - log1p(t/a)) at each a.  Returns (a, b, r2); a
    constant series yields r2 = 0 with a at the boundary.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(regret, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("t and regret must be 1-D arrays of equal length")
    if len(t) < 10:
        raise ValueError(f"need at least 10 points, got {len(t)}")
    if (t < 1.0).any():
        raise ValueError("fit requires t >= 1")

    def sse(a):
        g = np.log1p(t / a)
        b = float(np.mean(y - g))
        r = y - g - b
        return float(r @ r), b

    lo, hi = 1.0, 10.0 * float(t.max())
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, _ = sse(x1)
    f2, _ = sse(x2)
    for _ in range(200):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1, _ = sse(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2, _ = sse(x2)
        if hi - lo <= 1e-10 * max(1.0, hi):
            break
    a = 0.5 * (lo + hi)
    res, b = sse(a)
    sstot = float(np.sum((y - y.mean()) ** 2))
    if sstot <= 1e-300:
        return a, b, 0.0
    return a, b, 1.0 - res / sstot
