"""Check loss, its subgradients, and the squared-loss comparator.

Losses are treated as functions of the coefficient vector beta of a
linear predictor ``<x, beta>``; residuals are ``y - <x, beta>``.  A zero
residual is a kink of the check loss, where the zero vector is returned
(a valid subgradient, and the event has measure zero under continuous
noise).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .numkit import Matrix, Vector


@dataclass(frozen=True)
class QuantileLevel:
    """Quantile level tau, restricted to the open interval (0, 1)."""

    tau: float

    def __post_init__(self):
        tau = float(self.tau)
        if not 0.0 < tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau!r}")
        object.__setattr__(self, "tau", tau)

    @property
    def tau_bar(self) -> float:
        """max(tau, 1 - tau); bounds the subgradient weight."""
        return max(self.tau, 1.0 - self.tau)


class Observation(NamedTuple):
    x: Vector
    y: float


class BatchData(NamedTuple):
    """A batch of observations: xs has one row per observation."""

    xs: Matrix
    ys: Vector

    @property
    def size(self) -> int:
        return self.xs.shape[0]


def _tau(level) -> float:
    if isinstance(level, QuantileLevel):
        return level.tau
    return QuantileLevel(level).tau


def _check_batch(batch: BatchData):
    xs, ys = batch
    if xs.ndim != 2 or ys.shape != (xs.shape[0],):
        raise ValueError(f"batch shapes do not agree: {xs.shape} vs {ys.shape}")
    if xs.shape[0] == 0:
        raise ValueError("empty batch")


def check_loss(level, resid):
    """Pinball loss of residuals: tau*r for r >= 0, (tau-1)*r otherwise."""
    tau = _tau(level)
    r = np.asarray(resid, dtype=float)
    out = np.where(r >= 0.0, tau * r, (tau - 1.0) * r)
    if np.ndim(resid) == 0:
        return float(out)
    return out


def subgrad_point(level, obs: Observation, beta: Vector) -> Vector:
    """Subgradient of the check loss at beta for one observation."""
    tau = _tau(level)
    x, y = obs
    r = float(y) - float(x @ beta)
    if r > 0.0:
        w = -tau
    elif r < 0.0:
        w = 1.0 - tau
    else:
        return np.zeros_like(np.asarray(x, dtype=float))
    return w * np.asarray(x, dtype=float)


def subgrad_mean(level, batch: BatchData, beta: Vector) -> Vector:
    """Mean check-loss subgradient over a batch."""
    tau = _tau(level)
    _check_batch(batch)
    xs, ys = batch
    r = ys - xs @ beta
    w = np.where(r > 0.0, -tau, np.where(r < 0.0, 1.0 - tau, 0.0))
    return (w[:, None] * xs).mean(axis=0)


def empirical_loss(level, batch: BatchData, beta: Vector) -> float:
    """Mean check loss of a batch at beta."""
    _check_batch(batch)
    xs, ys = batch
    return float(np.mean(check_loss(level, ys - xs @ beta)))


def excess_loss(level, batch: BatchData, beta: Vector, beta_star: Vector) -> float:
    """Empirical loss at beta minus at beta_star; may be negative per batch."""
    _check_batch(batch)
    xs, ys = batch
    here = np.mean(check_loss(level, ys - xs @ beta))
    ref = np.mean(check_loss(level, ys - xs @ beta_star))
    return float(here - ref)


def squared_loss_grad(obs: Observation, beta: Vector) -> Vector:
    """Gradient of (y - <x, beta>)^2 at beta; note the factor 2."""
    x, y = obs
    r = float(y) - float(x @ beta)
    return -2.0 * r * np.asarray(x, dtype=float)
