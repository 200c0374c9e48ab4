"""Figure rendering for emitted experiment files.

Matplotlib is imported lazily and pinned to the Agg backend so headless
runs never touch a display.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from .harness import ConfigError


def _load_series(path: str) -> dict[str, np.ndarray]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols = ("t", "rel_err_median", "rel_err_q25", "rel_err_q75", "regret_mean")
    return {c: np.array([float(r[c]) for r in rows]) for c in cols}


def render_report(manifest_path: str, out_dir: str | None = None) -> list[str]:
    """Render the error and regret figures for one experiment.

    Returns the written figure paths.  Figures land next to the
    manifest unless out_dir says otherwise.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    try:
        with open(manifest_path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"manifest not found: {manifest_path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{manifest_path}: invalid JSON ({exc})") from None
    try:
        name = manifest["config"]["name"]
        variants = manifest["derived"]["variants"]
    except (KeyError, TypeError):
        raise ConfigError(f"{manifest_path}: not a manifest") from None

    base_dir = os.path.dirname(manifest_path)
    out_dir = out_dir if out_dir is not None else base_dir
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)

    series = {}
    for vname in sorted(variants):
        csv_path = os.path.join(base_dir, variants[vname]["csv"])
        if not os.path.exists(csv_path):
            raise ConfigError(f"{manifest_path}: missing output {csv_path}")
        series[vname] = _load_series(csv_path)

    written = []

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for vname, s in series.items():
        if len(s["t"]) == 0:
            continue
        (line,) = ax.plot(s["t"], s["rel_err_median"], label=vname, linewidth=1.5)
        ax.fill_between(
            s["t"], s["rel_err_q25"], s["rel_err_q75"],
            color=line.get_color(), alpha=0.2, linewidth=0,
        )
    ax.set_yscale("log")
    ax.set_xlabel("step")
    ax.set_ylabel("relative estimation error")
    ax.set_title(name)
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    err_path = os.path.join(out_dir, f"{name}_relative_error.png")
    fig.savefig(err_path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(err_path)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for vname, s in series.items():
        if len(s["t"]) == 0:
            continue
        ax.plot(s["t"], s["regret_mean"], label=vname, linewidth=1.5)
    ax.set_xlabel("step")
    ax.set_ylabel("mean cumulative regret")
    ax.set_title(name)
    ax.legend()
    ax.grid(True, alpha=0.3)
    regret_path = os.path.join(out_dir, f"{name}_regret.png")
    fig.savefig(regret_path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(regret_path)

    return written
