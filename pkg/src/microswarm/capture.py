"""Absorbing targets and capture-efficiency statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class Target:
    """Absorbing disk (2D) or ball (3D).

    Boundary points count as inside.
    """

    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"target radius must be > 0, got {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @classmethod
    def on_x_axis(cls, distance: float, radius: float, dim: int = 2) -> "Target":
        """Target ``distance`` um from the origin along +x."""
        if distance < 0:
            raise ValueError(f"target distance must be >= 0, got {distance}")
        return cls((float(distance),) + (0.0,) * (dim - 1), radius)

    def contains(self, point: Sequence[float]) -> bool:
        d2 = sum((p - c) ** 2 for p, c in zip(point, self.center))
        return d2 <= self.radius * self.radius


def check_capture(prev: Sequence[float], next: Sequence[float], target: Target) -> Optional[tuple]:
    """Capture point if the step ends inside the target, else ``None``.

    Only the end point is tested; ``prev`` is accepted for interface
    symmetry with a swept-segment test but is not used.
    """
    if target.contains(next):
        return tuple(float(v) for v in next)
    return None


@dataclass
class EfficiencySeries:
    """Cumulative captured fraction on a time grid.

    Single-run series leave ``std`` and ``n_runs`` unset; aggregated series
    carry the across-run mean in ``fraction_captured``.
    """

    times: np.ndarray
    fraction_captured: np.ndarray
    std: Optional[np.ndarray] = None
    n_runs: int = 1
    n_particles: Optional[int] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.fraction_captured = np.asarray(self.fraction_captured, dtype=float)
        if self.std is not None:
            self.std = np.asarray(self.std, dtype=float)
        if self.times.shape != self.fraction_captured.shape:
            raise ValueError("times and fractions must have the same length")

    @property
    def mean(self) -> np.ndarray:
        return self.fraction_captured

    @property
    def stderr(self) -> np.ndarray:
        if self.std is None:
            raise ValueError("single-run series has no spread")
        return self.std / math.sqrt(self.n_runs)


def efficiency_from_capture_times(capture_times: np.ndarray, time_grid: Sequence[float]) -> EfficiencySeries:
    """Fraction of ``capture_times`` (inf = never) at or before each grid time."""
    ct = np.asarray(capture_times, dtype=float)
    if ct.size == 0:
        raise ValueError("empty ensemble")
    grid = np.asarray(time_grid, dtype=float)
    # Tolerate rounding between step-count times and grid times.
    tol = 1e-9 * max(1.0, float(np.max(grid, initial=0.0)))
    ct_sorted = np.sort(ct)
    counts = np.searchsorted(ct_sorted, grid + tol, side="right")
    return EfficiencySeries(grid, counts / ct.size, n_particles=int(ct.size))


def capture_efficiency(trajectories: Iterable, time_grid: Sequence[float]) -> EfficiencySeries:
    """Captured fraction of an ensemble of :class:`~microswarm.dynamics.Trajectory`."""
    times = [math.inf if tr.capture_time is None else tr.capture_time for tr in trajectories]
    return efficiency_from_capture_times(np.array(times, dtype=float), time_grid)


def aggregate_runs(series: Sequence[EfficiencySeries]) -> EfficiencySeries:
    """Pointwise mean and sample standard deviation across runs."""
    if not series:
        raise ValueError("no runs to aggregate")
    grid = series[0].times
    for s in series[1:]:
        if s.times.shape != grid.shape or not np.array_equal(s.times, grid):
            raise ValueError("runs do not share a time grid")
    stack = np.stack([s.fraction_captured for s in series])
    # Shift by the first run so identical runs give exactly zero spread.
    dev = stack - stack[0]
    std = dev.std(axis=0, ddof=1) if len(series) > 1 else np.zeros(grid.shape)
    return EfficiencySeries(
        grid, stack[0] + dev.mean(axis=0), std, n_runs=len(series), n_particles=series[0].n_particles
    )
