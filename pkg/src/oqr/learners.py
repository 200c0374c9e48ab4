"""Iterative estimators: the online quantile learners, online least
squares, and the offline baselines.

Every step function is pure: it takes a LearnerState and returns a new
one plus a StepReport.  The phase is advanced at the start of each step
from the previous iterate's error, so the stepsize law a step uses
already reflects any transition triggered by where that iterate landed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .datagen import CovariateSpec, GroundTruth, NoiseSpec, sample_batch, sample_observation
from .metrics import TrajectoryRecord, regret_increment, relative_error
from .model import (
    BatchData,
    Observation,
    empirical_loss,
    squared_loss_grad,
    subgrad_mean,
    subgrad_point,
)
from .numkit import RngStream, Vector, axpy, norm2, solve_spd
from .schedules import (
    BATCH,
    INFINITE_STORAGE,
    LEAST_SQUARES,
    MIN_ETA,
    ONLINE_ONE_SAMPLE,
    Phase,
    PhaseState,
    ScheduleConfig,
    SwitchPolicy,
    Thresholds,
    eta_constant,
    eta_infinite_phase1,
    eta_least_squares,
    eta_phase1_geometric,
    eta_phase2_inverse_time,
    should_switch,
)

# Iterate norm beyond this counts as divergence.  Least squares under
# heavy tails is expected to trip it; that is a result, not a crash.
MAX_ITERATE_NORM = 1e12


class NumericalDivergence(RuntimeError):
    """The iterate left the representable / trusted range."""


@dataclass(frozen=True)
class LearnerState:
    """One learner's full state between steps.

    beta_star is the simulation oracle the radius-based switch policy
    reads; it is None when no oracle is available.  store accumulates
    every batch seen so far and exists only in full-storage mode.
    """

    beta: Vector
    t: int
    phase: PhaseState
    schedule: ScheduleConfig
    switch: SwitchPolicy
    thresholds: Thresholds
    beta_star: Vector | None = None
    store: BatchData | None = None

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim != 1 or beta.shape[0] != self.schedule.d:
            raise ValueError(
                f"beta has shape {beta.shape}, schedule says d={self.schedule.d}"
            )
        object.__setattr__(self, "beta", beta)
        if self.t < 0:
            raise ValueError(f"t must be nonnegative, got {self.t!r}")
        infinite = self.schedule.mode == INFINITE_STORAGE
        if infinite != (self.store is not None):
            raise ValueError("store must be present exactly in full-storage mode")
        if self.beta_star is not None:
            star = np.asarray(self.beta_star, dtype=float)
            if star.shape != beta.shape:
                raise ValueError(
                    f"beta_star has shape {star.shape}, beta has {beta.shape}"
                )
            object.__setattr__(self, "beta_star", star)


@dataclass(frozen=True)
class StepReport:
    """Telemetry for one step: stepsize taken, gradient norm, phase."""

    eta_used: float
    grad_norm: float
    phase_after: PhaseState

    def __post_init__(self):
        if not self.eta_used > 0.0:
            raise ValueError(f"eta_used must be positive, got {self.eta_used!r}")


def init_state(
    schedule: ScheduleConfig,
    switch: SwitchPolicy,
    thresholds: Thresholds,
    beta0: Vector | None = None,
    beta_star: Vector | None = None,
) -> LearnerState:
    """Fresh state at t=0, phase one.  beta0 defaults to the origin."""
    d = schedule.d
    beta = np.zeros(d) if beta0 is None else np.asarray(beta0, dtype=float)
    store = None
    if schedule.mode == INFINITE_STORAGE:
        store = BatchData(xs=np.empty((0, d)), ys=np.empty(0))
    return LearnerState(
        beta=beta,
        t=0,
        phase=PhaseState(),
        schedule=schedule,
        switch=switch,
        thresholds=thresholds,
        beta_star=beta_star,
        store=store,
    )


def _advanced_phase(state: LearnerState) -> PhaseState:
    err = None
    if state.beta_star is not None:
        err = norm2(state.beta - state.beta_star)
    return should_switch(state.switch, state.phase, state.t, err, state.thresholds)


def _eta(cfg: ScheduleConfig, phase: PhaseState, t: int) -> float:
    if cfg.mode == LEAST_SQUARES:
        return eta_least_squares(t, phase, cfg)
    if cfg.constant_only:
        return eta_constant(cfg)
    if phase.phase is Phase.ONE:
        if cfg.mode == INFINITE_STORAGE:
            return eta_infinite_phase1(t, cfg)
        return eta_phase1_geometric(t, cfg)
    if phase.phase is Phase.TWO:
        if cfg.mode == ONLINE_ONE_SAMPLE:
            return eta_phase2_inverse_time(t, _t_start(phase.t1), cfg)
        return eta_constant(cfg)
    return eta_phase2_inverse_time(t, _t_start(phase.t2), cfg)


def _t_start(marker: int | None) -> int:
    return 0 if marker is None else marker


def _require_mode(state: LearnerState, mode: str, op: str) -> None:
    if state.schedule.mode != mode:
        raise ValueError(
            f"{op} needs a {mode!r} schedule, got {state.schedule.mode!r}"
        )


def _apply(
    state: LearnerState,
    phase: PhaseState,
    eta: float,
    grad: Vector,
    store: BatchData | None = None,
) -> tuple[LearnerState, StepReport]:
    beta_new = axpy(-eta, grad, state.beta)
    if not np.all(np.isfinite(beta_new)):
        raise NumericalDivergence(f"non-finite iterate at t={state.t}")
    new_store = store if store is not None else state.store
    new_state = replace(
        state, beta=beta_new, t=state.t + 1, phase=phase, store=new_store
    )
    return new_state, StepReport(eta_used=eta, grad_norm=norm2(grad), phase_after=phase)


def step_online_qr(
    state: LearnerState, obs: Observation, level
) -> tuple[LearnerState, StepReport]:
    """One stochastic sub-gradient step on a single fresh observation."""
    _require_mode(state, ONLINE_ONE_SAMPLE, "step_online_qr")
    phase = _advanced_phase(state)
    eta = _eta(state.schedule, phase, state.t)
    grad = subgrad_point(level, obs, state.beta)
    return _apply(state, phase, eta, grad)


def step_batch_qr(
    state: LearnerState, batch: BatchData, level
) -> tuple[LearnerState, StepReport]:
    """One step on the mean sub-gradient of a fresh batch."""
    _require_mode(state, BATCH, "step_batch_qr")
    if batch.size < state.schedule.d:
        warnings.warn(
            f"batch of {batch.size} below dimension {state.schedule.d}; "
            "the contraction guarantees assume n_t >= d",
            stacklevel=2,
        )
    phase = _advanced_phase(state)
    eta = _eta(state.schedule, phase, state.t)
    grad = subgrad_mean(level, batch, state.beta)
    return _apply(state, phase, eta, grad)


def step_infinite_qr(
    state: LearnerState, new_batch: BatchData, level
) -> tuple[LearnerState, StepReport]:
    """Append the batch to the store, then step on the full-store mean."""
    _require_mode(state, INFINITE_STORAGE, "step_infinite_qr")
    if new_batch.size == 0:
        raise ValueError("batch is empty")
    store = BatchData(
        xs=np.concatenate([state.store.xs, new_batch.xs]),
        ys=np.concatenate([state.store.ys, new_batch.ys]),
    )
    phase = _advanced_phase(state)
    eta = _eta(state.schedule, phase, state.t)
    grad = subgrad_mean(level, store, state.beta)
    return _apply(state, phase, eta, grad, store=store)


def step_online_ls(
    state: LearnerState, obs: Observation
) -> tuple[LearnerState, StepReport]:
    """One squared-loss gradient step; guards against runaway iterates."""
    _require_mode(state, LEAST_SQUARES, "step_online_ls")
    phase = _advanced_phase(state)
    eta = _eta(state.schedule, phase, state.t)
    grad = squared_loss_grad(obs, state.beta)
    new_state, report = _apply(state, phase, eta, grad)
    if norm2(new_state.beta) > MAX_ITERATE_NORM:
        raise NumericalDivergence(
            f"iterate norm {norm2(new_state.beta):.3e} exceeds {MAX_ITERATE_NORM:.0e} "
            f"at t={state.t}"
        )
    return new_state, report


def fit_offline_qr(
    level,
    data: BatchData,
    cfg: ScheduleConfig | None = None,
    budget: int | None = None,
    beta0: Vector | None = None,
) -> Vector:
    """Full-sample sub-gradient descent benchmark.

    Geometric stepsizes for the first half of the budget, a small
    constant for the rest, returning the best iterate seen.  When cfg
    is omitted the stepsizes are derived from the data scale.  Warns if
    the loss never moved below its initial value.
    """
    if data.size == 0:
        raise ValueError("batch is empty")
    n, d = data.xs.shape
    if budget is None:
        budget = max(1, math.ceil(10.0 * d * math.log(max(n, 2))))
    beta = np.zeros(d) if beta0 is None else np.asarray(beta0, dtype=float)
    tau = float(getattr(level, "tau", level))
    tau_bar = max(tau, 1.0 - tau)
    if cfg is not None:
        eta0, geo, const_eta = cfg.eta0, cfg.geo_rate, cfg.const_eta
    else:
        row_norms = np.sqrt((data.xs**2).sum(axis=1))
        grad_cap = tau_bar * row_norms.max()
        scale = max(1.0, 2.0 * np.abs(data.ys).max() / max(row_norms.mean(), 1e-300))
        eta0 = scale / grad_cap if grad_cap > 0.0 else 1.0
        # anneal over five-ish decades so the constant tail polishes
        decay = 1e-7
        geo = decay ** (1.0 / max(budget // 2, 1))
        const_eta = eta0 * decay
    n1 = budget // 2
    best = beta
    best_loss = empirical_loss(level, data, beta)
    init_loss = best_loss
    for k in range(budget):
        eta = max(eta0 * geo**k, MIN_ETA) if k < n1 else const_eta
        grad = subgrad_mean(level, data, beta)
        beta = axpy(-eta, grad, beta)
        loss = empirical_loss(level, data, beta)
        if loss < best_loss:
            best, best_loss = beta, loss
    if best_loss >= init_loss:
        warnings.warn(
            f"no loss decrease over {budget} iterations; returning best seen",
            stacklevel=2,
        )
    return best


def fit_ols(data: BatchData) -> Vector:
    """Least squares via the normal equations."""
    if data.size == 0:
        raise ValueError("batch is empty")
    gram = data.xs.T @ data.xs
    return solve_spd(gram, data.xs.T @ data.ys)


def _as_batch(obs: Observation) -> BatchData:
    return BatchData(xs=obs.x[None, :], ys=np.array([obs.y]))


def run_trajectory(
    level,
    cov: CovariateSpec,
    truth: GroundTruth,
    noise: NoiseSpec,
    schedule: ScheduleConfig,
    switch: SwitchPolicy,
    thresholds: Thresholds,
    T: int,
    rng: RngStream,
    batch_sizes: int | list[int] | None = None,
    beta0: Vector | None = None,
) -> TrajectoryRecord:
    """Drive one learner for T steps and record its path.

    Row 0 is the initialization; row t records the iterate after step
    t, the stepsize and phase that step used, and the cumulative regret
    over steps before it.  Regret increments are measured in check loss
    for every mode, least squares included, so the arms stay
    comparable; the full-storage increment is taken over the store with
    the step's own batch already appended.  A NumericalDivergence stops
    the updates: remaining rows repeat the last finite error with a
    zero stepsize, frozen regret, and the diverged flag set.
    """
    if T < 0:
        raise ValueError(f"T must be nonnegative, got {T!r}")
    if schedule.d != cov.dim:
        raise ValueError(f"schedule.d={schedule.d} but covariates have dim={cov.dim}")
    mode = schedule.mode
    if mode in (BATCH, INFINITE_STORAGE):
        if batch_sizes is None:
            raise ValueError(f"{mode!r} mode needs batch_sizes")
        sizes = [batch_sizes] * T if isinstance(batch_sizes, int) else list(batch_sizes)
        if len(sizes) != T:
            raise ValueError(f"got {len(sizes)} batch sizes for T={T} steps")
    else:
        if batch_sizes is not None:
            raise ValueError(f"{mode!r} mode takes no batch_sizes")
        sizes = None

    state = init_state(
        schedule, switch, thresholds, beta0=beta0, beta_star=truth.beta_star
    )
    rel = [relative_error(state.beta, truth.beta_star)]
    etas = [0.0]
    phases = [str(state.phase.phase)]
    regrets = [0.0]
    regret = 0.0
    diverged_at = None
    for k in range(T):
        try:
            if mode == ONLINE_ONE_SAMPLE:
                obs = sample_observation(cov, truth, noise, rng)
                inc = regret_increment(level, _as_batch(obs), state.beta, truth.beta_star)
                state, report = step_online_qr(state, obs, level)
            elif mode == LEAST_SQUARES:
                obs = sample_observation(cov, truth, noise, rng)
                inc = regret_increment(level, _as_batch(obs), state.beta, truth.beta_star)
                state, report = step_online_ls(state, obs)
            elif mode == BATCH:
                batch = sample_batch(cov, truth, noise, rng, sizes[k])
                inc = regret_increment(level, batch, state.beta, truth.beta_star)
                state, report = step_batch_qr(state, batch, level)
            else:
                batch = sample_batch(cov, truth, noise, rng, sizes[k])
                grown = BatchData(
                    xs=np.concatenate([state.store.xs, batch.xs]),
                    ys=np.concatenate([state.store.ys, batch.ys]),
                )
                inc = regret_increment(level, grown, state.beta, truth.beta_star)
                state, report = step_infinite_qr(state, batch, level)
        except NumericalDivergence:
            diverged_at = k
            break
        regret += inc
        rel.append(relative_error(state.beta, truth.beta_star))
        etas.append(report.eta_used)
        phases.append(str(report.phase_after.phase))
        regrets.append(regret)

    rows = len(rel)
    diverged = [False] * rows
    if diverged_at is not None:
        pad = T + 1 - rows
        rel.extend([rel[-1]] * pad)
        etas.extend([0.0] * pad)
        phases.extend([phases[-1]] * pad)
        regrets.extend([regret] * pad)
        diverged.extend([True] * pad)
    return TrajectoryRecord(
        t=np.arange(T + 1),
        rel_err=np.array(rel),
        eta=np.array(etas),
        phase=tuple(phases),
        regret_cum=np.array(regrets),
        diverged=np.array(diverged, dtype=bool),
    )