"""CSV and JSON serialization of runs, plus run-configuration loading."""
from __future__ import annotations

import csv
import dataclasses
import json
import os
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .experiments import SpikeTimingSummary, TwoNeuronRun

FORMAT_VERSION = "1"
OUT_DIR_ENV = "EPROP_STDP_OUT_DIR"
DEFAULT_OUT_DIR = "runs"
TRACE_COLUMNS = ("t", "v_pre", "v_post", "z_pre", "z_post", "eps_v", "eps_u", "trace", "grad_cum")
EPOCH_COLUMNS = ("epoch", "mse_mean", "mse_std", "rate_mean", "rate_std")
SIDECAR_KEYS = {"format_version", "command", "seed", "config"}


def resolve_out_dir(explicit: str | os.PathLike | None = None) -> Path:
    """``explicit`` wins, then the environment override, then ``./runs``."""
    if explicit is not None:
        return Path(explicit)
    return Path(os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR)


def _fmt(x: float) -> str:
    if isinstance(x, float) and np.isnan(x):
        return ""
    return repr(float(x))


def write_two_neuron(run: TwoNeuronRun, out_dir, stem: str | None = None) -> Path:
    """One row per step with the ``TRACE_COLUMNS`` schema; returns the CSV path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or f"two_neuron_{run.config.model}_seed{run.config.seed}"
    path = out / f"{stem}.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for t in range(len(run.trace)):
            w.writerow([t, *(_fmt(getattr(run, c)[t]) for c in TRACE_COLUMNS[1:])])
    return path


def write_training(summary: SpikeTimingSummary, out_dir, stem: str | None = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or f"spike_timing_{summary.model}_seed{summary.config.seed}"
    path = out / f"{stem}.csv"
    cols = (summary.mse_mean, summary.mse_std, summary.rate_mean, summary.rate_std)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EPOCH_COLUMNS)
        for e in range(len(summary.mse_mean)):
            w.writerow([e, *(_fmt(c[e]) for c in cols)])
    return path


def write_sidecar(csv_path: Path, command: str, config, extra: dict | None = None) -> Path:
    """JSON next to ``csv_path`` holding the resolved config; loadable with ``load_config``."""
    cfg = dataclasses.asdict(config) if dataclasses.is_dataclass(config) else dict(config)
    doc = {"format_version": FORMAT_VERSION, "command": command, "seed": cfg.get("seed"), "config": cfg}
    if extra:
        doc["results"] = extra
    path = Path(csv_path).with_suffix(".json")
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header and float matrix; empty cells become NaN."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    data = np.array([[float(c) if c else np.nan for c in r] for r in rows[1:]], dtype=np.float64)
    return rows[0], data


def load_config(path, command: str, allowed: set[str]) -> dict:
    """Overrides for ``command`` from a JSON file.

    Accepts either a flat mapping of config fields or a sidecar written by a
    previous run.  Unknown keys raise ``ConfigError``.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    if "config" in doc:
        extra = set(doc) - SIDECAR_KEYS - {"results"}
        if extra:
            raise ConfigError(f"unknown top-level keys: {sorted(extra)}")
        if doc.get("command", command) != command:
            raise ConfigError(f"config was written for {doc['command']!r}, not {command!r}")
        if str(doc.get("format_version", FORMAT_VERSION)) != FORMAT_VERSION:
            raise ConfigError(f"unsupported format version {doc['format_version']!r}")
        doc = doc["config"]
        if not isinstance(doc, dict):
            raise ConfigError("'config' must be a JSON object")
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown keys for {command}: {sorted(unknown)}")
    return doc
