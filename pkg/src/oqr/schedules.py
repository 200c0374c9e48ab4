"""Stepsize laws for every learner phase and the phase-transition logic.

Each learner runs through up to three phases with distinct stepsize
behavior: geometric decay while far from the target, then either an
inverse-time decay (one-sample), a constant (batch and full-storage),
or both in sequence (batch adds a final inverse-time phase).  The
controller that advances phases is a pure function over a small
immutable PhaseState, so trajectories stay replayable.
"""

from __future__ import annotations

import enum
import math
import sys
from dataclasses import dataclass, replace

# geometric laws are floored here so positivity survives float underflow
MIN_ETA = sys.float_info.min

# learner modes
ONLINE_ONE_SAMPLE = "online_one_sample"
BATCH = "batch"
INFINITE_STORAGE = "infinite_storage"
LEAST_SQUARES = "least_squares"
MODES = (ONLINE_ONE_SAMPLE, BATCH, INFINITE_STORAGE, LEAST_SQUARES)

# switch policies
ORACLE_RADIUS = "oracle_radius"
FIXED_ITERATION = "fixed_iteration"
PLATEAU_DETECT = "plateau_detect"
POLICIES = (ORACLE_RADIUS, FIXED_ITERATION, PLATEAU_DETECT)

# calibration defaults; see the derivation helpers at the bottom
DEFAULT_C = 2.0
DEFAULT_C5 = 0.05
DEFAULT_C1 = 1.0
DEFAULT_T1_ALPHA = 2.0


class Phase(enum.Enum):
    ONE = "one"
    TWO = "two"
    THREE = "three"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class PhaseState:
    """Current phase plus the step indices where transitions happened.

    window buffers the recent error values PlateauDetect looks at; it is
    empty for the other policies.
    """

    phase: Phase = Phase.ONE
    t1: int | None = None
    t2: int | None = None
    window: tuple[float, ...] = ()

    def __post_init__(self):
        if self.t1 is not None and self.t2 is not None and self.t1 > self.t2:
            raise ValueError(f"t1={self.t1} exceeds t2={self.t2}")


@dataclass(frozen=True)
class ScheduleConfig:
    """All stepsize-law parameters for one learner.

    eta0/geo_rate drive phase one; const_eta the constant phases;
    ca/cb/b0_over_cl the inverse-time law.  offset_scales_with_d picks
    between the two inverse-time offsets in use: cb*d (one-sample phase
    two) and plain cb (batch phase three).  cl/cu/d0 feed the
    full-storage law, which is fully determined by them.  constant_only
    pins every step to const_eta regardless of phase (baseline arms).
    """

    mode: str
    d: int
    eta0: float = 1.0
    geo_rate: float = 0.995
    const_eta: float = 0.1
    ca: float = 1.0
    cb: float = 1.0
    b0_over_cl: float = 1.0
    offset_scales_with_d: bool = True
    cl: float = 1.0
    cu: float = 1.0
    d0: float | None = None
    ls_const: float = 0.25
    ls_decay_const: float = 1.0
    constant_only: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown learner mode {self.mode!r}")
        if not (isinstance(self.d, (int,)) and self.d >= 1):
            raise ValueError(f"d must be a positive integer, got {self.d!r}")
        for name in ("eta0", "const_eta", "ca", "cb", "b0_over_cl", "ls_const", "ls_decay_const"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if not 0.0 < self.geo_rate < 1.0:
            raise ValueError(f"geo_rate must lie in (0, 1), got {self.geo_rate!r}")
        if not 0.0 < self.cl <= self.cu:
            raise ValueError(f"need 0 < cl <= cu, got cl={self.cl!r} cu={self.cu!r}")
        if self.d0 is not None and not self.d0 > 0.0:
            raise ValueError(f"d0 must be positive when set, got {self.d0!r}")


@dataclass(frozen=True)
class SwitchPolicy:
    """When to advance phases.

    oracle_radius compares the supplied error against the thresholds;
    fixed_iteration switches at preset step counts; plateau_detect
    switches when the supplied error improved by less than rel_improve
    (relatively) over the last `window` steps.
    """

    kind: str = ORACLE_RADIUS
    t1: int | None = None
    t2: int | None = None
    window: int | None = None
    rel_improve: float | None = None

    def __post_init__(self):
        if self.kind not in POLICIES:
            raise ValueError(f"unknown switch policy {self.kind!r}")
        if self.kind == FIXED_ITERATION:
            if self.t1 is None or self.t1 < 0:
                raise ValueError("fixed_iteration needs t1 >= 0")
            if self.t2 is not None and self.t2 < self.t1:
                raise ValueError(f"t2={self.t2} precedes t1={self.t1}")
        elif self.t1 is not None or self.t2 is not None:
            raise ValueError(f"{self.kind} does not take fixed t1/t2")
        if self.kind == PLATEAU_DETECT:
            if self.window is None or self.window < 1:
                raise ValueError("plateau_detect needs window >= 1")
            if self.rel_improve is None or not self.rel_improve > 0.0:
                raise ValueError("plateau_detect needs rel_improve > 0")
        elif self.window is not None or self.rel_improve is not None:
            raise ValueError(f"{self.kind} does not take window/rel_improve")


@dataclass(frozen=True)
class Thresholds:
    """Error radii that separate phases (r23 only exists in batch mode)."""

    r12: float
    r23: float | None = None

    def __post_init__(self):
        if not self.r12 > 0.0:
            raise ValueError(f"r12 must be positive, got {self.r12!r}")
        if self.r23 is not None and not self.r23 > 0.0:
            raise ValueError(f"r23 must be positive when set, got {self.r23!r}")


def eta_phase1_geometric(t: int, cfg: ScheduleConfig) -> float:
    """eta0 * geo_rate^t."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t!r}")
    return max(cfg.eta0 * cfg.geo_rate**t, MIN_ETA)


def eta_phase2_inverse_time(t: int, t_start: int, cfg: ScheduleConfig) -> float:
    """(b0/cl) * ca / (t - t_start + offset), offset = cb*d or plain cb."""
    offset = cfg.cb * cfg.d if cfg.offset_scales_with_d else cfg.cb
    denom = t - t_start + offset
    if denom <= 0.0:
        raise ValueError(
            f"inverse-time denominator {denom!r} at t={t}, t_start={t_start}"
        )
    return cfg.b0_over_cl * cfg.ca / denom


def eta_constant(cfg: ScheduleConfig) -> float:
    return cfg.const_eta


def eta_infinite_phase1(t: int, cfg: ScheduleConfig) -> float:
    """sqrt(cl)/(8 cu) * (1 - cl/(100 cu))^t * d0."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t!r}")
    if cfg.d0 is None:
        raise ValueError("full-storage schedule needs d0 configured")
    rate = 1.0 - 0.01 * cfg.cl / cfg.cu
    return max(math.sqrt(cfg.cl) / (8.0 * cfg.cu) * rate**t * cfg.d0, MIN_ETA)


def eta_least_squares(t: int, state: PhaseState, cfg: ScheduleConfig) -> float:
    """Constant ls_const/d in phase one, then ls_decay_const/(t - t1 + d)."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t!r}")
    if state.phase is Phase.ONE:
        return cfg.ls_const / cfg.d
    return cfg.ls_decay_const / (t - state.t1 + cfg.d)


def _advance(state: PhaseState, t: int) -> PhaseState:
    if state.phase is Phase.ONE:
        return PhaseState(phase=Phase.TWO, t1=t, t2=None)
    return PhaseState(phase=Phase.THREE, t1=state.t1, t2=t)


def should_switch(
    policy: SwitchPolicy,
    state: PhaseState,
    t: int,
    err: float | None,
    thresholds: Thresholds,
) -> PhaseState:
    """Advance the phase at most one step; never moves backwards.

    err is the error value the policy monitors.  oracle_radius reads it
    as ||beta - beta*|| and compares against the thresholds (strict <
    into phase two, <= into phase three, matching the region
    definitions); plateau_detect only uses its relative improvement.
    A third phase exists only where thresholds.r23 (or a fixed t2) says
    so.
    """
    if state.phase is Phase.THREE:
        return state
    if policy.kind == ORACLE_RADIUS:
        if err is None:
            raise ValueError("oracle_radius policy needs the current error")
        if state.phase is Phase.ONE and err < thresholds.r12:
            return _advance(state, t)
        if (
            state.phase is Phase.TWO
            and thresholds.r23 is not None
            and err <= thresholds.r23
        ):
            return _advance(state, t)
        return state
    if policy.kind == FIXED_ITERATION:
        if state.phase is Phase.ONE and t >= policy.t1:
            return _advance(state, t)
        if state.phase is Phase.TWO and policy.t2 is not None and t >= policy.t2:
            return _advance(state, t)
        return state
    # plateau_detect
    if err is None:
        raise ValueError("plateau_detect policy needs the current error")
    window = (state.window + (err,))[-(policy.window + 1) :]
    if len(window) == policy.window + 1:
        first, last = window[0], window[-1]
        improve = (first - last) / abs(first) if first != 0.0 else 0.0
        if improve < policy.rel_improve:
            if state.phase is Phase.ONE or thresholds.r23 is not None:
                return _advance(state, t)
            return replace(state, window=window)
    return replace(state, window=window)


# Calibration helpers: the closed forms the harness uses to resolve a
# preset into concrete ScheduleConfig numbers.

def eta0_one_sample(
    d0: float, d: int, tau_bar: float, cl: float = 1.0, cu: float = 1.0, c: float = DEFAULT_C
) -> float:
    """c * sqrt(cl) * d0 / (cu * tau_bar^2 * d)."""
    return c * math.sqrt(cl) * d0 / (cu * tau_bar**2 * d)


def eta0_batch(d0: float, cl: float = 1.0, cu: float = 1.0, c: float = DEFAULT_C) -> float:
    """c * sqrt(cl) / cu * d0."""
    return c * math.sqrt(cl) / cu * d0


def default_geo_rate(
    d: int, tau_bar: float, cl: float = 1.0, cu: float = 1.0, c5: float = DEFAULT_C5
) -> float:
    """1 - c5 * (cl/cu) / (d * tau_bar^2)."""
    return 1.0 - c5 * (cl / cu) / (d * tau_bar**2)


def fixed_t1(d: int, d0: float, gamma: float, alpha: float = DEFAULT_T1_ALPHA) -> int:
    """ceil(alpha * d * log(d0 / gamma)), floored at 1."""
    if not d0 > 0.0 or not gamma > 0.0:
        raise ValueError("fixed_t1 needs positive d0 and gamma")
    return max(1, math.ceil(alpha * d * math.log(d0 / gamma)))


def switch_radius(gamma: float, cl: float = 1.0, infinite: bool = False) -> float:
    """Phase 1|2 boundary: 8 gamma / sqrt(cl); full storage drops the cl factor."""
    return 8.0 * gamma if infinite else 8.0 * gamma / math.sqrt(cl)


def batch_boundary_radius(
    d: int,
    n: int,
    b0: float,
    tau_bar: float,
    cl: float = 1.0,
    cu: float = 1.0,
    c1: float = DEFAULT_C1,
) -> float:
    """Phase 2|3 boundary for batch mode: c1 sqrt(cu)/cl tau_bar sqrt(d/n) b0."""
    if not n >= 1:
        raise ValueError(f"need n >= 1, got {n!r}")
    return c1 * math.sqrt(cu) / cl * tau_bar * math.sqrt(d / n) * b0
