"""Config files, CSV emission and run manifests.

Config grammar: one ``key = value`` per line (``:`` also accepted), ``#``
comments, lists comma-separated with optional surrounding brackets. Keys are
the :class:`~microswarm.experiments.ExperimentConfig` fields with the
physical parameters flattened::

    experiment = distance_sweep
    models = ABP, RTP, CHIRAL_ABP
    distances = 2, 4, 7.78, 10
    n_runs = 20

A manifest written by :func:`run` is also accepted as a config, which
reproduces the original outputs.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from . import __version__
from ._backend import BACKEND
from .analytics import PhysicalParams
from .experiments import (
    DISTANCE_SWEEP_3D,
    MSD,
    OMEGA_SWEEP,
    ConfigError,
    ExperimentConfig,
    ResultTable,
    run_experiment,
)

THREADS_ENV = "MICROSWARM_THREADS"

_PHYSICAL_KEYS = {
    "particle_radius": "particle_radius",
    "temperature": "temperature",
    "viscosity": "viscosity",
    "speed": "speed",
    "omega": "omega",
    "alpha": "tumble_rate",
}
_INT_KEYS = {"dimension", "n_particles", "n_runs", "master_seed"}
_FLOAT_KEYS = {"t_total", "dt", "record_every", "target_radius"}
_LIST_KEYS = {"distances", "omegas", "eval_times", "chiral_axis"}
_REQUIRED = ("experiment", "models")
KNOWN_KEYS = frozenset(_PHYSICAL_KEYS) | _INT_KEYS | _FLOAT_KEYS | _LIST_KEYS | set(_REQUIRED)


def _split_list(text: str) -> list[str]:
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        text = text[1:-1]
    return [part.strip() for part in text.split(",") if part.strip()]


def _number(key: str, text: str, kind):
    try:
        if kind is int:
            value = float(text)
            if not value.is_integer():
                raise ValueError
            return int(value)
        return float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}={text!r} is not a valid {kind.__name__}") from None


def config_from_mapping(raw: Mapping[str, Any]) -> ExperimentConfig:
    """Build and validate a config from raw string (or already typed) values."""
    unknown = sorted(set(raw) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    for key in _REQUIRED:
        if key not in raw or raw[key] in ("", None, []):
            raise ConfigError(f"missing required key: {key}")

    kwargs: dict[str, Any] = {"experiment": str(raw["experiment"]).strip().lower()}
    models = raw["models"]
    kwargs["models"] = tuple(_split_list(models) if isinstance(models, str) else models)

    physical = {}
    for key, name in _PHYSICAL_KEYS.items():
        if key in raw and raw[key] not in ("", None):
            value = raw[key]
            physical[name] = _number(key, value, float) if isinstance(value, str) else float(value)
    try:
        kwargs["physical"] = PhysicalParams(**physical)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    for key in _INT_KEYS | _FLOAT_KEYS:
        if key in raw:
            value = raw[key]
            kind = int if key in _INT_KEYS else float
            kwargs[key] = _number(key, value, kind) if isinstance(value, str) else kind(value)
    for key in _LIST_KEYS:
        if key in raw:
            value = raw[key]
            if value is None and key == "eval_times":
                kwargs[key] = None
                continue
            items = _split_list(value) if isinstance(value, str) else list(value)
            kwargs[key] = tuple(_number(key, v, float) if isinstance(v, str) else float(v) for v in items)

    if kwargs["experiment"] == DISTANCE_SWEEP_3D:
        kwargs.setdefault("dimension", 3)
    if kwargs["experiment"] == OMEGA_SWEEP:
        kwargs.setdefault("distances", (7.78,))
    if kwargs["experiment"] == MSD and "eval_times" not in raw:
        kwargs["eval_times"] = None
    if "dt" in kwargs and "record_every" not in kwargs:
        kwargs["record_every"] = kwargs["dt"]
    return ExperimentConfig(**kwargs)


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    """Parse a key/value config file (or a run manifest) into a validated config."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        return config_from_mapping(doc.get("config", doc))
    parser = configparser.ConfigParser(
        delimiters=("=", ":"), comment_prefixes=("#",), inline_comment_prefixes=("#",),
        interpolation=None, strict=True,
    )
    parser.optionxform = str
    try:
        parser.read_string("[config]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_mapping(dict(parser["config"]))


def config_to_mapping(cfg: ExperimentConfig) -> dict:
    """Flat, JSON-ready echo of every resolved config value."""
    out: dict[str, Any] = {
        "experiment": cfg.experiment,
        "models": [m.name for m in cfg.models],
        "dimension": cfg.dimension,
    }
    for key, name in _PHYSICAL_KEYS.items():
        out[key] = getattr(cfg.physical, name)
    for f in dataclasses.fields(cfg):
        if f.name in ("experiment", "models", "dimension", "physical"):
            continue
        value = getattr(cfg, f.name)
        out[f.name] = list(value) if isinstance(value, tuple) else value
    return out


def derived_quantities(cfg: ExperimentConfig) -> dict:
    c = cfg.coefficients
    return {
        "D_T_um2_s": c.D_T,
        "D_R_rad2_s": c.D_R,
        "persistence_length_um": c.persistence_length,
        "persistence_time_s": c.persistence_time,
        "tumble_rate_1_s": c.D_R if cfg.physical.tumble_rate is None else cfg.physical.tumble_rate,
    }


def format_number(value) -> str:
    """Locale-independent text with at most 9 significant digits."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        text = format(value, ".9g")
        return "0" if text == "-0" else text
    return str(value)


def write_csv(table: ResultTable, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([format_number(v) for v in row])


def read_csv(path: str | os.PathLike) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


@dataclass
class RunManifest:
    config: dict
    derived: dict
    master_seed: int
    version: str
    backend: str
    threads: int
    duration_s: float
    outputs: list
    observations: dict

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


def output_name(cfg: ExperimentConfig) -> str:
    return "msd.csv" if cfg.experiment == MSD else "capture_efficiency.csv"


def resolve_threads(threads: int | None) -> int:
    """CLI value wins, then the environment, then 1."""
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ConfigError(f"{THREADS_ENV}={env!r} is not an integer") from None
        else:
            threads = 1
    if threads < 1:
        raise ConfigError(f"threads={threads} must be >= 1")
    return threads


def run(cfg: ExperimentConfig, output_dir: str | os.PathLike, threads: int | None = None) -> RunManifest:
    """Run the configured experiment, write its CSV and ``manifest.json``."""
    threads = resolve_threads(threads)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    table = run_experiment(cfg, threads=threads)
    csv_path = out / output_name(cfg)
    write_csv(table, csv_path)
    manifest = RunManifest(
        config=config_to_mapping(cfg),
        derived=derived_quantities(cfg),
        master_seed=cfg.master_seed,
        version=__version__,
        backend=BACKEND,
        threads=threads,
        duration_s=round(time.perf_counter() - start, 3),
        outputs=[str(csv_path), str(out / "manifest.json")],
        observations=table.observations,
    )
    (out / "manifest.json").write_text(manifest.to_json() + "\n")
    return manifest

