"""Experiment orchestration: JSON configs, kind-to-variant resolution,
replication across seeds, and deterministic CSV + manifest emission.

The seed scheme is frozen: replication r draws everything from a stream
seeded base_seed + r, r = 1..R, so raising R never perturbs the earlier
replications.  Stepsizes run in dropped-b units (b0_over_cl = 1); the
analytic density bounds are computed anyway and recorded in the
manifest since their theory-faithful values are far too conservative to
step with.
"""

from __future__ import annotations

import copy
import json
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .datagen import (
    GAUSSIAN,
    IDENTITY,
    RANDOM_UNIT,
    STUDENT_T,
    CovariateSpec,
    NoiseSpec,
    density_bounds,
    make_truth,
    mean_abs,
    sample_batch,
)
from .learners import fit_offline_qr, run_trajectory
from .metrics import (
    EnsembleSummary,
    TrajectoryRecord,
    relative_error,
    summarize_ensemble,
)
from .numkit import RngStream
from .schedules import (
    BATCH,
    FIXED_ITERATION,
    INFINITE_STORAGE,
    LEAST_SQUARES,
    MODES,
    ONLINE_ONE_SAMPLE,
    ORACLE_RADIUS,
    ScheduleConfig,
    SwitchPolicy,
    Thresholds,
    batch_boundary_radius,
    default_geo_rate,
    eta0_batch,
    eta0_one_sample,
    switch_radius,
)

STEPSIZE_COMPARISON = "stepsize_comparison"
ACCURACY_COMPARISON = "accuracy_comparison"
CONVERGENCE_DYNAMICS = "convergence_dynamics"
PARAMETER_SENSITIVITY = "parameter_sensitivity"
REGRET_DYNAMICS = "regret_dynamics"
TRADE_OFF = "trade_off"
KINDS = frozenset(
    {
        STEPSIZE_COMPARISON,
        ACCURACY_COMPARISON,
        CONVERGENCE_DYNAMICS,
        PARAMETER_SENSITIVITY,
        REGRET_DYNAMICS,
        TRADE_OFF,
    }
)

CSV_HEADER = (
    "t,rel_err_mean,rel_err_median,rel_err_q25,rel_err_q75,"
    "eta,phase,regret_mean,diverged_frac"
)

# trade_off arms start at ||beta0 - beta*|| = this many gammas
GOOD_INIT_GAMMAS = 0.2
# the large-stepsize trade_off arm multiplies ca by this
TRADE_OFF_CA_FACTOR = 20.0
# flat baseline arm of stepsize_comparison; a choice, nothing pins it
CONSTANT_ARM_ETA = 0.05
# heavy-tail degrees of freedom used by convergence_dynamics
HEAVY_NU = 1.1

_SCHEDULE_BOOL_KEYS = frozenset({"offset_scales_with_d", "constant_only"})
_SCHEDULE_NUM_KEYS = frozenset(
    {
        "eta0",
        "geo_rate",
        "const_eta",
        "ca",
        "cb",
        "b0_over_cl",
        "d0",
        "ls_const",
        "ls_decay_const",
    }
)
SCHEDULE_OVERRIDE_KEYS = _SCHEDULE_BOOL_KEYS | _SCHEDULE_NUM_KEYS

_NAME_RE = re.compile(r"[A-Za-z0-9][A-Za-z0-9_.-]*")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}" if path else msg)


def _sub(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _check_keys(obj, path: str, required: frozenset | set, optional: frozenset | set):
    if not isinstance(obj, dict):
        _fail(path or "config", "expected a JSON object")
    unknown = sorted(set(obj) - set(required) - set(optional))
    if unknown:
        _fail(_sub(path, unknown[0]), "unknown key")
    missing = sorted(set(required) - set(obj))
    if missing:
        _fail(_sub(path, missing[0]), "missing required key")


_MISSING = object()


def _get_num(obj, key, path, default=_MISSING, integer=False):
    if key not in obj:
        if default is _MISSING:
            _fail(_sub(path, key), "missing required key")
        return default
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        _fail(_sub(path, key), f"expected a number, got {val!r}")
    if integer:
        if isinstance(val, float) and not val.is_integer():
            _fail(_sub(path, key), f"expected an integer, got {val!r}")
        return int(val)
    return float(val)


def _get_str(obj, key, path, default=_MISSING):
    if key not in obj:
        if default is _MISSING:
            _fail(_sub(path, key), "missing required key")
        return default
    val = obj[key]
    if not isinstance(val, str):
        _fail(_sub(path, key), f"expected a string, got {val!r}")
    return val


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment, fully resolved except per-variant derivations."""

    name: str
    d: int
    T: int
    tau: float
    noise: NoiseSpec
    snr: float
    cov: CovariateSpec
    mode: str
    schedule_overrides: dict = field(default_factory=dict)
    switch: SwitchPolicy = SwitchPolicy(kind=ORACLE_RADIUS)
    batch_size: int | tuple[int, ...] | None = None
    replications: int = 20
    base_seed: int = 20260816
    thin: int = 1
    output_path: str = "out"

    def __post_init__(self):
        if not _NAME_RE.fullmatch(self.name):
            raise ConfigError(f"name: not filename-safe: {self.name!r}")
        if self.T < 1:
            raise ConfigError(f"T: must be >= 1, got {self.T!r}")
        if self.replications < 1:
            raise ConfigError(f"replications: must be >= 1, got {self.replications!r}")
        if self.thin < 1:
            raise ConfigError(f"thin: must be >= 1, got {self.thin!r}")
        if not 0 <= self.base_seed < 2**63:
            raise ConfigError(f"base_seed: must fit in 64 bits, got {self.base_seed!r}")
        if not self.snr > 0.0:
            raise ConfigError(f"snr: must be positive, got {self.snr!r}")
        if self.d != self.cov.dim:
            raise ConfigError(f"d: {self.d} does not match cov dimension {self.cov.dim}")
        if self.tau != self.noise.tau:
            raise ConfigError("noise: its tau must equal the experiment tau")
        if self.mode not in MODES:
            raise ConfigError(f"learner.mode: unknown mode {self.mode!r}")
        needs_batches = self.mode in (BATCH, INFINITE_STORAGE)
        if needs_batches and self.batch_size is None:
            raise ConfigError(f"batch_size: required for mode {self.mode!r}")
        if not needs_batches and self.batch_size is not None:
            raise ConfigError(f"batch_size: not accepted for mode {self.mode!r}")
        if isinstance(self.batch_size, (list, tuple)):
            sizes = tuple(int(n) for n in self.batch_size)
            if len(sizes) != self.T:
                raise ConfigError(
                    f"batch_size: {len(sizes)} entries for T={self.T} steps"
                )
            if any(n < 1 for n in sizes):
                raise ConfigError("batch_size: entries must be >= 1")
            object.__setattr__(self, "batch_size", sizes)
        elif self.batch_size is not None and self.batch_size < 1:
            raise ConfigError(f"batch_size: must be >= 1, got {self.batch_size!r}")


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Parse and validate one strict-schema config object."""
    _check_keys(
        raw,
        "",
        {"name", "d", "T", "tau", "noise", "snr", "learner"},
        {"cov", "batch_size", "replications", "base_seed", "thin", "output_path"},
    )
    name = _get_str(raw, "name", "")
    d = _get_num(raw, "d", "", integer=True)
    if d < 1:
        _fail("d", f"must be >= 1, got {d}")
    T = _get_num(raw, "T", "", integer=True)
    tau = _get_num(raw, "tau", "")
    snr = _get_num(raw, "snr", "")

    noise_obj = raw["noise"]
    _check_keys(noise_obj, "noise", {"family"}, {"scale", "nu"})
    family = _get_str(noise_obj, "family", "noise")
    scale = _get_num(noise_obj, "scale", "noise", default=1.0)
    nu = _get_num(noise_obj, "nu", "noise", default=None)
    try:
        noise = NoiseSpec(family, tau=tau, scale=scale, nu=nu)
    except ValueError as exc:
        _fail("noise", str(exc))

    cov_obj = raw.get("cov", {})
    _check_keys(cov_obj, "cov", set(), {"kind", "sigma"})
    cov_kind = _get_str(cov_obj, "kind", "cov", default=IDENTITY)
    sigma = cov_obj.get("sigma")
    if sigma is not None:
        try:
            sigma = np.asarray(sigma, dtype=float)
        except (TypeError, ValueError):
            _fail("cov.sigma", "expected a numeric array")
    try:
        cov = CovariateSpec(d, kind=cov_kind, sigma=sigma)
    except ValueError as exc:
        _fail("cov", str(exc))

    learner = raw["learner"]
    _check_keys(learner, "learner", {"mode"}, {"schedule", "switch"})
    mode = _get_str(learner, "mode", "learner")
    sched_obj = learner.get("schedule", {})
    _check_keys(sched_obj, "learner.schedule", set(), SCHEDULE_OVERRIDE_KEYS)
    overrides = {}
    for key, val in sched_obj.items():
        kpath = _sub("learner.schedule", key)
        if key in _SCHEDULE_BOOL_KEYS:
            if not isinstance(val, bool):
                _fail(kpath, f"expected a boolean, got {val!r}")
        elif isinstance(val, bool) or not isinstance(val, (int, float)):
            _fail(kpath, f"expected a number, got {val!r}")
        overrides[key] = val

    switch_obj = learner.get("switch", {"kind": ORACLE_RADIUS})
    _check_keys(switch_obj, "learner.switch", {"kind"}, {"t1", "t2", "window", "rel_improve"})
    try:
        switch = SwitchPolicy(
            kind=_get_str(switch_obj, "kind", "learner.switch"),
            t1=_get_num(switch_obj, "t1", "learner.switch", default=None, integer=True),
            t2=_get_num(switch_obj, "t2", "learner.switch", default=None, integer=True),
            window=_get_num(switch_obj, "window", "learner.switch", default=None, integer=True),
            rel_improve=_get_num(switch_obj, "rel_improve", "learner.switch", default=None),
        )
    except ValueError as exc:
        _fail("learner.switch", str(exc))

    batch_size = raw.get("batch_size")
    if batch_size is not None and not isinstance(batch_size, (int, list)):
        _fail("batch_size", f"expected an integer or list, got {batch_size!r}")
    if isinstance(batch_size, bool):
        _fail("batch_size", "expected an integer or list, got a boolean")

    try:
        return ExperimentConfig(
            name=name,
            d=d,
            T=T,
            tau=tau,
            noise=noise,
            snr=snr,
            cov=cov,
            mode=mode,
            schedule_overrides=overrides,
            switch=switch,
            batch_size=batch_size,
            replications=_get_num(raw, "replications", "", default=20, integer=True),
            base_seed=_get_num(raw, "base_seed", "", default=20260816, integer=True),
            thin=_get_num(raw, "thin", "", default=1, integer=True),
            output_path=_get_str(raw, "output_path", "", default="out"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_raw(path: str) -> dict:
    """Read one JSON config file without validating its schema."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return raw


def load_config(path: str) -> ExperimentConfig:
    return config_from_dict(load_raw(path))


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Canonical config echo; feeding it back reproduces the experiment."""
    noise = {"family": cfg.noise.family, "scale": cfg.noise.scale}
    if cfg.noise.nu is not None:
        noise["nu"] = cfg.noise.nu
    cov = {"kind": cfg.cov.kind}
    if cfg.cov.sigma is not None:
        cov["sigma"] = np.asarray(cfg.cov.sigma).tolist()
    switch = {"kind": cfg.switch.kind}
    for key in ("t1", "t2", "window", "rel_improve"):
        val = getattr(cfg.switch, key)
        if val is not None:
            switch[key] = val
    out = {
        "name": cfg.name,
        "d": cfg.d,
        "T": cfg.T,
        "tau": cfg.tau,
        "noise": noise,
        "snr": cfg.snr,
        "cov": cov,
        "learner": {
            "mode": cfg.mode,
            "schedule": dict(cfg.schedule_overrides),
            "switch": switch,
        },
        "replications": cfg.replications,
        "base_seed": cfg.base_seed,
        "thin": cfg.thin,
        "output_path": cfg.output_path,
    }
    if cfg.batch_size is not None:
        out["batch_size"] = (
            list(cfg.batch_size) if isinstance(cfg.batch_size, tuple) else cfg.batch_size
        )
    return out


@dataclass(frozen=True)
class ResolvedVariant:
    """One arm of an experiment, self-contained and picklable."""

    name: str
    T: int
    tau: float
    snr: float
    cov: CovariateSpec
    noise: NoiseSpec
    gamma: float
    schedule: ScheduleConfig
    switch: SwitchPolicy
    thresholds: Thresholds
    batch_sizes: int | tuple[int, ...] | None
    init_offset_gammas: float | None = None
    offline: bool = False
    offline_n: int | None = None
    offline_budget: int | None = None


def _make_variant(
    cfg: ExperimentConfig,
    name: str,
    mode: str | None = None,
    noise: NoiseSpec | None = None,
    switch: SwitchPolicy | None = None,
    schedule_extra: dict | None = None,
    init_offset_gammas: float | None = None,
    offline: bool = False,
) -> ResolvedVariant:
    mode = mode if mode is not None else cfg.mode
    noise_v = noise if noise is not None else cfg.noise
    gamma = mean_abs(noise_v)
    cl, cu = cfg.cov.cl, cfg.cov.cu
    tau_bar = max(cfg.tau, 1.0 - cfg.tau)
    offset = init_offset_gammas if init_offset_gammas is not None else cfg.snr
    d0 = offset * gamma

    sched = {
        "mode": mode,
        "d": cfg.d,
        "cl": cl,
        "cu": cu,
        "d0": d0,
        "b0_over_cl": 1.0,
        "ca": 20.0,
        "cb": 30.0,
        "const_eta": 0.1,
        "offset_scales_with_d": mode != BATCH,
    }
    if mode == ONLINE_ONE_SAMPLE:
        sched["eta0"] = eta0_one_sample(d0, cfg.d, tau_bar, cl, cu)
        # c5 = 0.125 reproduces the (1 - 0.5/d) decay at tau = 1/2
        sched["geo_rate"] = default_geo_rate(cfg.d, tau_bar, cl, cu, c5=0.125)
    elif mode == BATCH:
        sched["eta0"] = eta0_batch(d0, cl, cu)
        sched["geo_rate"] = 0.9  # batch gradients contract dimension-free
    sched.update(cfg.schedule_overrides)
    if schedule_extra:
        sched.update(schedule_extra)
    try:
        schedule = ScheduleConfig(**sched)
    except (TypeError, ValueError) as exc:
        _fail("learner.schedule", str(exc))

    batch_sizes = cfg.batch_size if mode in (BATCH, INFINITE_STORAGE) else None
    r23 = None
    if mode == BATCH:
        n_min = batch_sizes if isinstance(batch_sizes, int) else min(batch_sizes)
        b0_run = schedule.b0_over_cl * cl
        r23 = batch_boundary_radius(cfg.d, n_min, b0_run, tau_bar, cl, cu)
    thresholds = Thresholds(
        r12=switch_radius(gamma, cl, infinite=(mode == INFINITE_STORAGE)), r23=r23
    )

    offline_n = None
    if offline:
        offline_n = (
            cfg.T
            if cfg.batch_size is None
            else (
                cfg.T * cfg.batch_size
                if isinstance(cfg.batch_size, int)
                else sum(cfg.batch_size)
            )
        )
    return ResolvedVariant(
        name=name,
        T=cfg.T,
        tau=cfg.tau,
        snr=cfg.snr,
        cov=cfg.cov,
        noise=noise_v,
        gamma=gamma,
        schedule=schedule,
        switch=switch if switch is not None else cfg.switch,
        thresholds=thresholds,
        batch_sizes=batch_sizes,
        init_offset_gammas=init_offset_gammas,
        offline=offline,
        offline_n=offline_n,
    )


def experiment_plans(cfg: ExperimentConfig, kind: str) -> tuple[ResolvedVariant, ...]:
    """Expand an experiment kind into its fixed set of arms."""
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    if kind == STEPSIZE_COMPARISON:
        const_eta = cfg.schedule_overrides.get("const_eta", CONSTANT_ARM_ETA)
        return (
            _make_variant(cfg, "statistical"),
            _make_variant(
                cfg,
                "constant",
                schedule_extra={"constant_only": True, "const_eta": const_eta},
                switch=SwitchPolicy(kind=FIXED_ITERATION, t1=10**9),
            ),
            _make_variant(
                cfg,
                "inverse_time",
                switch=SwitchPolicy(kind=FIXED_ITERATION, t1=0),
            ),
        )
    if kind == ACCURACY_COMPARISON:
        return (
            _make_variant(cfg, "online"),
            _make_variant(cfg, "offline", offline=True),
        )
    if kind == CONVERGENCE_DYNAMICS:
        light = (
            cfg.noise
            if cfg.noise.family == GAUSSIAN
            else NoiseSpec(GAUSSIAN, tau=cfg.tau)
        )
        heavy = (
            cfg.noise
            if cfg.noise.family == STUDENT_T
            else NoiseSpec(STUDENT_T, tau=cfg.tau, nu=HEAVY_NU)
        )
        plans = []
        for label, noise_v in (("gaussian", light), ("heavy", heavy)):
            plans.append(_make_variant(cfg, f"qr_{label}", noise=noise_v))
            plans.append(
                _make_variant(cfg, f"ls_{label}", noise=noise_v, mode=LEAST_SQUARES)
            )
        return tuple(plans)
    base_ca = float(cfg.schedule_overrides.get("ca", 20.0))
    if kind == PARAMETER_SENSITIVITY:
        return tuple(
            _make_variant(cfg, name, schedule_extra={"ca": base_ca * scale})
            for name, scale in (("ca_low", 1 / 3), ("ca_base", 1.0), ("ca_high", 3.0))
        )
    if kind == REGRET_DYNAMICS:
        return tuple(
            _make_variant(cfg, f"ca_{base_ca * scale:g}", schedule_extra={"ca": base_ca * scale})
            for scale in (0.5, 1.0, 2.0)
        )
    # trade_off: both arms start close to the truth, in phase two
    return (
        _make_variant(cfg, "ca_small", init_offset_gammas=GOOD_INIT_GAMMAS),
        _make_variant(
            cfg,
            "ca_large",
            schedule_extra={"ca": base_ca * TRADE_OFF_CA_FACTOR},
            init_offset_gammas=GOOD_INIT_GAMMAS,
        ),
    )


def _worker_count() -> int:
    env = os.environ.get("OQR_WORKERS", "").strip()
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"OQR_WORKERS must be an integer, got {env!r}") from None
        if n < 1:
            raise ConfigError(f"OQR_WORKERS must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


def _run_replication(job: tuple[ResolvedVariant, int]) -> TrajectoryRecord:
    plan, seed = job
    rng = RngStream(seed)
    truth = make_truth(plan.cov, plan.snr, RANDOM_UNIT, plan.gamma, rng)
    if plan.offline:
        data = sample_batch(plan.cov, truth, plan.noise, rng, plan.offline_n)
        beta = fit_offline_qr(plan.tau, data, budget=plan.offline_budget)
        rows = plan.T + 1
        rel = relative_error(beta, truth.beta_star)
        return TrajectoryRecord(
            t=np.arange(rows),
            rel_err=np.full(rows, rel),
            eta=np.zeros(rows),
            phase=("offline",) * rows,
            regret_cum=np.zeros(rows),
            diverged=np.zeros(rows, dtype=bool),
        )
    beta0 = None
    if plan.init_offset_gammas is not None:
        # along the truth direction, so the offset norm is exact
        beta0 = truth.beta_star * (1.0 + plan.init_offset_gammas * plan.gamma / truth.norm)
    sizes = plan.batch_sizes
    if isinstance(sizes, tuple):
        sizes = list(sizes)
    return run_trajectory(
        plan.tau,
        plan.cov,
        truth,
        plan.noise,
        plan.schedule,
        plan.switch,
        plan.thresholds,
        plan.T,
        rng,
        batch_sizes=sizes,
        beta0=beta0,
    )


def replicate_plan(cfg: ExperimentConfig, plan: ResolvedVariant) -> EnsembleSummary:
    """Run all replications of one arm and aggregate them."""
    jobs = [(plan, cfg.base_seed + r) for r in range(1, cfg.replications + 1)]
    workers = min(_worker_count(), len(jobs))
    if workers <= 1:
        records = [_run_replication(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_replication, jobs))
    return summarize_ensemble(records, thin=cfg.thin)


def replicate(cfg: ExperimentConfig, kind: str, variant: str) -> EnsembleSummary:
    for plan in experiment_plans(cfg, kind):
        if plan.name == variant:
            return replicate_plan(cfg, plan)
    names = [plan.name for plan in experiment_plans(cfg, kind)]
    raise ConfigError(f"kind {kind!r} has no variant {variant!r} (have {names})")


def _fmt(x: float) -> str:
    return f"{x:.11e}"


def emit_csv(summary: EnsembleSummary | TrajectoryRecord, path: str) -> str:
    """Write one summary as a delimited file with a fixed format."""
    if isinstance(summary, TrajectoryRecord):
        summary = summarize_ensemble([summary], thin=1)
    lines = [CSV_HEADER]
    for i in range(len(summary.t)):
        lines.append(
            ",".join(
                (
                    str(int(summary.t[i])),
                    _fmt(summary.rel_err_mean[i]),
                    _fmt(summary.rel_err_median[i]),
                    _fmt(summary.rel_err_q25[i]),
                    _fmt(summary.rel_err_q75[i]),
                    _fmt(summary.eta[i]),
                    summary.phase[i],
                    _fmt(summary.regret_mean[i]),
                    _fmt(summary.diverged_frac[i]),
                )
            )
        )
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _variant_manifest(plan: ResolvedVariant, cl: float, cu: float, csv_name: str) -> dict:
    try:
        bounds = density_bounds(plan.noise, cl, cu)
        b0_analytic, b1_analytic = bounds.b0, bounds.b1
    except ValueError:
        b0_analytic = b1_analytic = None  # density underflowed on the grid
    noise = {"family": plan.noise.family, "scale": plan.noise.scale}
    if plan.noise.nu is not None:
        noise["nu"] = plan.noise.nu
    out = {
        "csv": csv_name,
        "noise": noise,
        "noise_shift": plan.noise.shift,
        "gamma": plan.gamma,
        "b0_analytic": b0_analytic,
        "b1_analytic": b1_analytic,
        "truth_norm": plan.snr * plan.gamma,
        "schedule": asdict(plan.schedule),
        "switch": asdict(plan.switch),
        "thresholds": {"r12": plan.thresholds.r12, "r23": plan.thresholds.r23},
        "init_offset_gammas": plan.init_offset_gammas,
        "offline": plan.offline,
    }
    if plan.batch_sizes is not None:
        out["batch_sizes"] = (
            plan.batch_sizes
            if isinstance(plan.batch_sizes, int)
            else list(plan.batch_sizes)
        )
    if plan.offline:
        out["offline_n"] = plan.offline_n
        out["offline_budget"] = (
            plan.offline_budget
            if plan.offline_budget is not None
            else max(1, math.ceil(10.0 * plan.schedule.d * math.log(max(plan.offline_n, 2))))
        )
    return out


def run_experiment(cfg: ExperimentConfig, kind: str) -> list[str]:
    """Run every arm of the experiment; emit CSVs and one manifest."""
    plans = experiment_plans(cfg, kind)
    outdir = cfg.output_path
    if outdir:
        os.makedirs(outdir, exist_ok=True)
    outputs = []
    variants = {}
    for plan in plans:
        csv_name = f"{cfg.name}_{plan.name}.csv"
        summary = replicate_plan(cfg, plan)
        outputs.append(emit_csv(summary, os.path.join(outdir, csv_name)))
        variants[plan.name] = _variant_manifest(plan, cfg.cov.cl, cfg.cov.cu, csv_name)
    manifest = {
        "config": config_to_dict(cfg),
        "kind": kind,
        "version": __version__,
        "seed_scheme": "replication r uses stream seed base_seed + r, r = 1..R",
        "derived": {"cl": cfg.cov.cl, "cu": cfg.cov.cu, "variants": variants},
    }
    manifest_path = os.path.join(outdir, f"{cfg.name}_manifest.json")
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    outputs.append(manifest_path)
    return outputs


def rerun_from_manifest(path: str) -> list[str]:
    """Reproduce an experiment from its manifest alone."""
    try:
        with open(path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if "config" not in manifest or "kind" not in manifest:
        raise ConfigError(f"{path}: not a manifest (missing config/kind)")
    return run_experiment(config_from_dict(manifest["config"]), manifest["kind"])


def _set_path(obj: dict, dotted: str, value):
    keys = dotted.split(".")
    here = obj
    for key in keys[:-1]:
        nxt = here.get(key)
        if nxt is None:
            nxt = {}
            here[key] = nxt
        if not isinstance(nxt, dict):
            raise ConfigError(f"{dotted}: {key!r} is not an object")
        here = nxt
    here[keys[-1]] = value


def run_sweep(raw: dict, kind: str, param: str, values: list) -> list[str]:
    """Run one experiment per value of a dotted config parameter."""
    if not values:
        raise ConfigError("sweep needs at least one value")
    if not param:
        raise ConfigError("sweep needs a parameter path")
    outputs = []
    leaf = param.rsplit(".", 1)[-1]
    base_name = raw.get("name", "sweep")
    for value in values:
        branch = copy.deepcopy(raw)
        _set_path(branch, param, value)
        tag = f"{value:g}" if isinstance(value, (int, float)) else str(value)
        branch["name"] = f"{base_name}_{leaf}_{tag}"
        outputs.extend(run_experiment(config_from_dict(branch), kind))
    return outputs


def normalized_regret(
    summary: EnsembleSummary, batch_sizes: int | list[int] | None, T: int
) -> np.ndarray:
    """Cumulative regret per consumed sample at each summary row.

    One-sample modes consume one observation per step; batch modes
    consume their batch.  Row 0 (nothing consumed yet) reports 0.
    """
    if batch_sizes is None:
        sizes = np.ones(T)
    elif isinstance(batch_sizes, int):
        sizes = np.full(T, float(batch_sizes))
    else:
        sizes = np.asarray(batch_sizes, dtype=float)
        if len(sizes) != T:
            raise ValueError(f"got {len(sizes)} batch sizes for T={T} steps")
    consumed = np.concatenate([[0.0], np.cumsum(sizes)])
    counts = consumed[np.asarray(summary.t, dtype=int)]
    return summary.regret_mean / np.maximum(counts, 1.0)


def _preset_dict(
    name: str,
    *,
    d: int = 20,
    T: int = 20000,
    replications: int = 20,
    thin: int = 20,
    tau: float = 0.5,
    noise: dict | None = None,
    snr: float = 20.0,
    learner: dict | None = None,
) -> dict:
    return {
        "name": name,
        "d": d,
        "T": T,
        "tau": tau,
        "noise": noise if noise is not None else {"family": "gaussian", "scale": 1.0},
        "snr": snr,
        "learner": learner if learner is not None else {"mode": ONLINE_ONE_SAMPLE},
        "replications": replications,
        "base_seed": 20260816,
        "thin": thin,
        "output_path": f"out/{name}",
    }


def _build_presets() -> dict[str, tuple[str, dict]]:
    desk: dict[str, tuple[str, dict]] = {}

    def add(kind: str, stem: str, paper_extra: dict | None = None, **kw):
        for scale, extra in (
            ("desk", {}),
            ("paper", {"d": 100, "T": 100_000, "replications": 50, "thin": 100}),
        ):
            if scale == "paper" and paper_extra:
                extra = {**extra, **paper_extra}
            name = f"{stem}_{scale}"
            desk[name] = (kind, _preset_dict(name, **{**kw, **extra}))

    add(STEPSIZE_COMPARISON, "stepsize_comparison")
    add(ACCURACY_COMPARISON, "accuracy_comparison")
    # heavy-tail arms wander far in the hot early steps, so the decay
    # runs at half the usual exponent and the switch waits until the
    # planned iteration 8 d ln(snr); oracle crossings strand too often
    add(
        CONVERGENCE_DYNAMICS,
        "convergence_dynamics",
        learner={
            "mode": ONLINE_ONE_SAMPLE,
            "schedule": {"geo_rate": 0.9875},
            "switch": {"kind": FIXED_ITERATION, "t1": 480},
        },
        paper_extra={
            "learner": {
                "mode": ONLINE_ONE_SAMPLE,
                "schedule": {"geo_rate": 0.9975},
                "switch": {"kind": FIXED_ITERATION, "t1": 2400},
            }
        },
    )
    add(
        PARAMETER_SENSITIVITY,
        "parameter_sensitivity",
        learner={"mode": ONLINE_ONE_SAMPLE, "schedule": {"ca": 15.0, "cb": 20.0}},
    )
    add(
        REGRET_DYNAMICS,
        "regret_dynamics",
        noise={"family": "gaussian", "scale": 0.16},
        snr=0.3,
        learner={
            "mode": ONLINE_ONE_SAMPLE,
            "schedule": {"ca": 0.4, "cb": 30.0},
            "switch": {"kind": FIXED_ITERATION, "t1": 0},
        },
    )
    add(
        TRADE_OFF,
        "trade_off",
        d=40,
        noise={"family": "student_t", "scale": 1.0, "nu": 1.1},
        snr=0.2,
        learner={"mode": ONLINE_ONE_SAMPLE, "schedule": {"ca": 1.0, "cb": 2.0}},
    )
    return desk


PRESETS = _build_presets()


def preset(name: str) -> tuple[ExperimentConfig, str]:
    """Look up a named preset; returns (config, kind)."""
    if name not in PRESETS:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        )
    kind, raw = PRESETS[name]
    return config_from_dict(copy.deepcopy(raw)), kind