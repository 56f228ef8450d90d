"""Scenario runners producing tidy result tables.

Each runner splits its work into (cell, run) units. A unit's trajectories
use stream keys ``SeedSpec(master_seed, cell_run_index(cell, run), i)``, so
units are independent of each other and of scheduling; the thread pool only
changes wall-clock time, never the output.
"""

from __future__ import annotations

import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .analytics import (
    MotionCoefficients,
    PhysicalParams,
    derive_coefficients,
    msd_closed_form,
    msd_closed_form_3d,
)
from .capture import EfficiencySeries, Target, aggregate_runs
from .dynamics import StepConfig, ensemble_keys, simulate_ensemble, steps_for
from .models import Model

log = logging.getLogger(__name__)

DISTANCE_SWEEP = "distance_sweep"
MSD = "msd"
OMEGA_SWEEP = "omega_sweep"
DISTANCE_SWEEP_3D = "distance_sweep_3d"
EXPERIMENTS = (DISTANCE_SWEEP, MSD, OMEGA_SWEEP, DISTANCE_SWEEP_3D)

DEFAULT_DISTANCES = (2.0, 4.0, 6.0, 7.78, 10.0, 14.0, 20.0, 30.0)
DEFAULT_OMEGAS = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)
DEFAULT_EVAL_TIMES = (0.5, 0.78, 2.0, 5.0)

CAPTURE_COLUMNS = (
    "experiment", "dimension", "model", "l_um", "omega_rad_s", "time_s",
    "mean_efficiency", "std_efficiency", "n_particles", "n_runs",
)
MSD_COLUMNS = ("model", "time_s", "empirical_msd_um2", "stderr_um2", "closed_form_msd_um2")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    models: tuple
    dimension: int = 2
    physical: PhysicalParams = field(default_factory=PhysicalParams)
    n_particles: int = 1000
    n_runs: int = 100
    t_total: float = 5.0
    dt: float = 0.01
    record_every: float = 0.01
    target_radius: float = 5.0
    distances: tuple = DEFAULT_DISTANCES
    omegas: tuple = DEFAULT_OMEGAS
    eval_times: Optional[tuple] = DEFAULT_EVAL_TIMES
    master_seed: int = 1
    chiral_axis: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: unknown kind {self.experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
        try:
            models = tuple(Model.parse(m) for m in self.models)
        except ValueError as exc:
            raise ConfigError(f"models: {exc}") from None
        if not models:
            raise ConfigError("models: at least one model is required")
        if len(set(models)) != len(models):
            raise ConfigError("models: duplicate entries")
        object.__setattr__(self, "models", models)
        for key in ("distances", "omegas", "chiral_axis"):
            object.__setattr__(self, key, tuple(float(v) for v in getattr(self, key)))
        if self.eval_times is not None:
            object.__setattr__(self, "eval_times", tuple(float(v) for v in self.eval_times))

        _check(self.dimension in (2, 3), "dimension", self.dimension, "must be 2 or 3")
        _check(self.n_particles >= 1, "n_particles", self.n_particles, "must be >= 1")
        _check(self.n_runs >= 1, "n_runs", self.n_runs, "must be >= 1")
        _check(self.dt > 0, "dt", self.dt, "must be > 0")
        _check(self.t_total > 0, "t_total", self.t_total, "must be > 0")
        _check(self.record_every > 0, "record_every", self.record_every, "must be > 0")
        _check(self.target_radius > 0, "target_radius", self.target_radius, "must be > 0")
        _check(0 <= self.master_seed < 2**64, "master_seed", self.master_seed, "must be in [0, 2**64)")
        _check(len(self.distances) >= 1, "distances", self.distances, "must not be empty")
        _check(all(d >= 0 and math.isfinite(d) for d in self.distances), "distances", self.distances, "must be >= 0")
        _check(len(self.chiral_axis) == 3 and any(self.chiral_axis), "chiral_axis", self.chiral_axis,
               "must be a non-zero 3-vector")
        if self.experiment == OMEGA_SWEEP:
            _check(len(self.omegas) >= 1, "omegas", self.omegas, "must not be empty")
            _check(Model.CHIRAL_ABP in self.models, "models", self.models, "must include CHIRAL_ABP for omega_sweep")
        if self.experiment == DISTANCE_SWEEP_3D:
            _check(self.dimension == 3, "dimension", self.dimension, "must be 3 for distance_sweep_3d")
        if self.experiment in (DISTANCE_SWEEP, OMEGA_SWEEP):
            _check(self.dimension == 2, "dimension", self.dimension, f"must be 2 for {self.experiment}")

        try:
            n_steps = steps_for(self.t_total, self.dt, "t_total")
            stride = steps_for(self.record_every, self.dt, "record_every")
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        _check(stride >= 1 and n_steps % stride == 0, "record_every", self.record_every,
               "must divide t_total into whole records")
        for t in self.eval_times or ():
            _check(0 <= t <= self.t_total, "eval_times", t, f"must lie in [0, t_total={self.t_total}]")
            k = round(t / self.record_every)
            _check(abs(k * self.record_every - t) <= 1e-9 * max(1.0, t), "eval_times", t,
                   f"must be a multiple of record_every={self.record_every}")
        if self.eval_times is not None:
            _check(len(set(self.eval_times)) == len(self.eval_times), "eval_times", self.eval_times,
                   "must not repeat")

    @property
    def coefficients(self) -> MotionCoefficients:
        return derive_coefficients(self.physical)

    @property
    def n_steps(self) -> int:
        return steps_for(self.t_total, self.dt, "t_total")

    def sample_times(self) -> tuple:
        """Times at which results are reported, sorted."""
        if self.eval_times is not None:
            return tuple(sorted(self.eval_times))
        stride = steps_for(self.record_every, self.dt)
        return tuple(k * self.dt for k in range(0, self.n_steps + 1, stride))

    def sample_steps(self) -> np.ndarray:
        return np.array([steps_for(t, self.dt, "eval_times") for t in self.sample_times()], dtype=np.int64)

    def step_config(self, model: Model, omega: Optional[float] = None) -> StepConfig:
        params = self.physical if omega is None else replace(self.physical, omega=omega)
        return StepConfig(self.dt, model, self.coefficients, params, self.chiral_axis)


def _check(ok: bool, key: str, value, bound: str):
    if not ok:
        raise ConfigError(f"{key}={value!r} {bound}")


@dataclass
class ResultTable:
    columns: tuple
    rows: list
    observations: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def select(self, **where) -> list[dict]:
        """Rows (as dicts) whose columns equal every ``where`` item."""
        out = []
        for row in self.rows:
            rec = dict(zip(self.columns, row))
            if all(_eq(rec[k], v) for k, v in where.items()):
                out.append(rec)
        return out


def _eq(a, b) -> bool:
    if isinstance(a, float) or isinstance(b, float):
        return abs(float(a) - float(b)) <= 1e-12 * max(1.0, abs(float(b)))
    return a == b


def cell_run_index(dimension: int, model: Model, distance: Optional[float], omega: Optional[float], run: int) -> int:
    """Run index for ``run`` of one cell.

    The upper 32 bits hash the cell's identity so sweeps with overlapping grids
    reuse streams for equal cells and never alias different ones.
    """
    label = f"d={dimension}|m={model.name}|l={distance!r}|w={omega!r}"
    cell = int.from_bytes(hashlib.blake2b(label.encode(), digest_size=4).digest(), "little")
    return (cell << 32) | run


def _map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class _CaptureCell:
    model: Model
    distance: float
    omega: Optional[float]  # None for achiral models


def _capture_cells(cfg: ExperimentConfig, models: Iterable[Model], omegas: Optional[Sequence[float]]):
    cells = []
    for model in models:
        for l in cfg.distances:
            if model is Model.CHIRAL_ABP:
                for w in (omegas if omegas is not None else (cfg.physical.omega,)):
                    cells.append(_CaptureCell(model, l, float(w)))
            else:
                cells.append(_CaptureCell(model, l, None))
    return cells


def _capture_table(cfg: ExperimentConfig, cells: list, threads: int) -> tuple[ResultTable, dict]:
    steps = cfg.sample_steps()
    times = cfg.sample_times()
    dim = cfg.dimension

    def unit(item):
        cell, run = item
        step_cfg = cfg.step_config(cell.model, cell.omega)
        keys = ensemble_keys(cfg.master_seed, cell_run_index(dim, cell.model, cell.distance, cell.omega, run),
                             cfg.n_particles)
        target = Target.on_x_axis(cell.distance, cfg.target_radius, dim)
        res = simulate_ensemble(step_cfg, keys, cfg.t_total, dim=dim, target=target,
                                record_steps=[], record_positions=False)
        cap = res.capture_step
        counts = [int(np.count_nonzero((cap >= 0) & (cap <= k))) for k in steps]
        return EfficiencySeries(times, np.array(counts) / cfg.n_particles, n_particles=cfg.n_particles)

    units = [(cell, r) for cell in cells for r in range(cfg.n_runs)]
    log.info("%s: %d cells x %d runs x %d particles", cfg.experiment, len(cells), cfg.n_runs, cfg.n_particles)
    results = _map(unit, units, threads)
    series = {}
    for i, cell in enumerate(cells):
        series[cell] = aggregate_runs(results[i * cfg.n_runs:(i + 1) * cfg.n_runs])

    rows = []
    for cell, agg in series.items():
        w = cell.omega if cell.omega is not None else 0.0
        for t, m, s in zip(times, agg.mean, agg.std):
            rows.append((cfg.experiment, dim, cell.model.name, cell.distance, w, t,
                         float(m), float(s), cfg.n_particles, cfg.n_runs))
    rows.sort(key=lambda r: (r[2], r[3], r[4], r[5]))
    return ResultTable(CAPTURE_COLUMNS, rows), series


def run_distance_sweep(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Capture efficiency for every model and target distance."""
    table, _ = _capture_table(cfg, _capture_cells(cfg, cfg.models, None), threads)
    return table


def run_omega_sweep(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Chiral-only capture efficiency over the angular-speed grid."""
    table, _ = _capture_table(cfg, _capture_cells(cfg, (Model.CHIRAL_ABP,), cfg.omegas), threads)
    return table


def run_3d(cfg: ExperimentConfig, threads: int = 1, compare_2d: bool = False) -> ResultTable:
    """3D distance sweep.

    With ``compare_2d`` the matching 2D sweep is also run and whether every
    3D efficiency is at most its 2D counterpart is stored in
    ``table.observations`` (reported, never enforced).
    """
    if cfg.dimension != 3:
        raise ConfigError(f"dimension={cfg.dimension!r} must be 3 for distance_sweep_3d")
    table, _ = _capture_table(cfg, _capture_cells(cfg, cfg.models, None), threads)
    if compare_2d:
        cfg2 = replace(cfg, experiment=DISTANCE_SWEEP, dimension=2)
        flat, _ = _capture_table(cfg2, _capture_cells(cfg2, cfg2.models, None), threads)
        i = CAPTURE_COLUMNS.index("mean_efficiency")
        violations = [
            {"model": r3[2], "l_um": r3[3], "time_s": r3[5], "eff_3d": r3[i], "eff_2d": r2[i]}
            for r3, r2 in zip(table.rows, flat.rows)
            if r3[i] > r2[i]
        ]
        table.observations["3d_le_2d"] = not violations
        table.observations["3d_gt_2d_cells"] = violations
    return table


def _chan_merge(a, b):
    """Merge (count, mean, M2) moment triples; arrays per sample time."""
    na, ma, va = a
    nb, mb, vb = b
    n = na + nb
    delta = mb - ma
    return n, ma + delta * (nb / n), va + vb + delta * delta * (na * nb / n)


def run_msd_experiment(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """Empirical MSD of free (target-less) particles beside the closed form.

    Each model pools ``n_runs * n_particles`` trajectories. Per-run moments
    are merged in run order, so the reduction is deterministic.
    """
    steps = cfg.sample_steps()
    times = np.array(cfg.sample_times())
    dim = cfg.dimension

    def unit(item):
        model, run = item
        keys = ensemble_keys(cfg.master_seed, cell_run_index(dim, model, None, None, run), cfg.n_particles)
        res = simulate_ensemble(cfg.step_config(model), keys, cfg.t_total, dim=dim, record_steps=steps)
        # Released at the origin, so positions are displacements.
        sq = np.einsum("nkd,nkd->nk", res.positions, res.positions)
        mean = sq.mean(axis=0)
        return sq.shape[0], mean, ((sq - mean) ** 2).sum(axis=0)

    units = [(m, r) for m in cfg.models for r in range(cfg.n_runs)]
    results = _map(unit, units, threads)
    coeffs = cfg.coefficients
    rows = []
    for i, model in enumerate(cfg.models):
        acc = results[i * cfg.n_runs]
        for part in results[i * cfg.n_runs + 1:(i + 1) * cfg.n_runs]:
            acc = _chan_merge(acc, part)
        n, mean, m2 = acc
        stderr = np.sqrt(m2 / (n - 1) / n) if n > 1 else np.zeros_like(mean)
        if dim == 2:
            closed = msd_closed_form(model, coeffs, cfg.physical, times)
        else:
            closed = msd_closed_form_3d(model, coeffs, cfg.physical, times)
        for t, e, s, c in zip(times, mean, stderr, np.atleast_1d(closed)):
            rows.append((model.name, float(t), float(e), float(s), float(c)))
    rows.sort(key=lambda r: (r[0], r[1]))
    return ResultTable(MSD_COLUMNS, rows)


RUNNERS = {
    DISTANCE_SWEEP: run_distance_sweep,
    MSD: run_msd_experiment,
    OMEGA_SWEEP: run_omega_sweep,
    DISTANCE_SWEEP_3D: run_3d,
}


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    return RUNNERS[cfg.experiment](cfg, threads=threads)
