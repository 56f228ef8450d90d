"""Euler-Maruyama steppers for the four motility models, 2D and 3D.

The single-step functions here are the readable reference. Whole
trajectories and ensembles run inside the batch kernel (compiled when
available), which applies exactly the same update.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import _kernels_py
from ._backend import kernels
from .analytics import MotionCoefficients, PhysicalParams, tumble_rate
from .capture import Target
from .models import Model
from .stochastics import SeedSpec, Stream, stream_keys

Z_AXIS = (0.0, 0.0, 1.0)


@dataclass
class ParticleState2D:
    x: float = 0.0
    y: float = 0.0
    phi: float = 0.0  # unwrapped
    captured_at: Optional[float] = None


@dataclass
class ParticleState3D:
    position: tuple = (0.0, 0.0, 0.0)
    heading: tuple = Z_AXIS
    captured_at: Optional[float] = None


@dataclass(frozen=True)
class StepConfig:
    dt: float
    model: Model
    coeffs: MotionCoefficients
    params: PhysicalParams
    chiral_axis: tuple = Z_AXIS  # lab frame, 3D only

    def __post_init__(self):
        object.__setattr__(self, "model", Model.parse(self.model))
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.coeffs.D_R > 0 and self.dt > self.coeffs.persistence_time / 10:
            warnings.warn(
                f"dt={self.dt} s exceeds a tenth of the persistence time "
                f"({self.coeffs.persistence_time:.4g} s)",
                stacklevel=2,
            )
        norm = math.sqrt(sum(k * k for k in self.chiral_axis))
        if not norm > 0:
            raise ValueError("chiral_axis must be non-zero")
        object.__setattr__(self, "chiral_axis", tuple(float(k) / norm for k in self.chiral_axis))


def step_constants(cfg: StepConfig) -> tuple:
    """Pack the per-step constants shared by both kernel backends."""
    model, dt, p = cfg.model, cfg.dt, cfg.params
    v = 0.0 if model is Model.PBP else float(p.speed)
    sig_t = math.sqrt(2.0 * cfg.coeffs.D_T * dt)
    sig_r = 0.0 if model is Model.RTP else math.sqrt(2.0 * cfg.coeffs.D_R * dt)
    wdt = p.omega * dt if model is Model.CHIRAL_ABP else 0.0
    p_tumble = tumble_rate(cfg.coeffs, p) * dt if model is Model.RTP else 0.0
    kx, ky, kz = cfg.chiral_axis
    return (v, dt, sig_t, sig_r, wdt, p_tumble, math.cos(wdt), math.sin(wdt), kx, ky, kz)


def step_2d(state: ParticleState2D, cfg: StepConfig, stream: Stream) -> ParticleState2D:
    """Advance one planar particle by ``cfg.dt``.

    Translation is ``v (cos phi, sin phi) dt`` plus ``sqrt(2 D_T dt)`` white
    noise (no propulsion for PBP). The heading diffuses with ``D_R`` (ABP,
    PBP), additionally turns by ``omega dt`` (chiral), or is redrawn
    uniformly with probability ``alpha dt`` (RTP, which has no continuous
    rotational noise).
    """
    if state.captured_at is not None:
        raise ValueError("captured particles are frozen")
    x, y, phi = _kernels_py.step2d(int(cfg.model), state.x, state.y, state.phi, step_constants(cfg), stream)
    return ParticleState2D(x, y, phi)


def step_3d(state: ParticleState3D, cfg: StepConfig, stream: Stream) -> ParticleState3D:
    """Advance one particle in 3D by ``cfg.dt``.

    The heading takes a tangent-plane Gaussian kick of size ``sqrt(2 D_R dt)``
    and is renormalized. Chiral particles first precess by ``omega dt`` about
    the fixed lab axis ``cfg.chiral_axis``; RTP headings are redrawn
    uniformly on the sphere with probability ``alpha dt``.
    """
    if state.captured_at is not None:
        raise ValueError("captured particles are frozen")
    h = state.heading
    norm = math.sqrt(sum(c * c for c in h))
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"heading must be a unit vector, |h| = {norm!r}")
    p, h = _kernels_py.step3d(int(cfg.model), tuple(state.position), tuple(h), step_constants(cfg), stream)
    return ParticleState3D(p, h)


@dataclass
class Trajectory:
    record_times: np.ndarray
    states: np.ndarray  # (n_records, dim)
    capture_time: Optional[float] = None
    orientations: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class EnsembleResult:
    """Batched trajectories of one ensemble.

    ``capture_step`` is -1 for particles never captured. ``positions`` and
    ``orientations`` are ``None`` unless recording was requested.
    """

    dt: float
    n_steps: int
    record_steps: np.ndarray
    capture_step: np.ndarray
    final_positions: np.ndarray
    positions: Optional[np.ndarray] = None
    orientations: Optional[np.ndarray] = None

    @property
    def record_times(self) -> np.ndarray:
        return self.record_steps * self.dt

    @property
    def capture_times(self) -> np.ndarray:
        t = self.capture_step * self.dt
        return np.where(self.capture_step >= 0, t, np.inf)

    def __len__(self):
        return self.capture_step.size

    def trajectories(self) -> list[Trajectory]:
        if self.positions is None:
            raise ValueError("ensemble was simulated without recording")
        out = []
        for i in range(len(self)):
            cap = self.capture_step[i]
            out.append(
                Trajectory(
                    self.record_times,
                    self.positions[i],
                    None if cap < 0 else float(cap * self.dt),
                    None if self.orientations is None else self.orientations[i],
                )
            )
        return out


def steps_for(duration: float, dt: float, what: str = "duration") -> int:
    """Number of whole steps of ``dt`` in ``duration``; rejects non-multiples."""
    n = round(duration / dt)
    if n < 0 or abs(n * dt - duration) > 1e-9 * max(1.0, abs(duration)):
        raise ValueError(f"{what}={duration} is not an integer multiple of dt={dt}")
    return int(n)


def _target_tuple(target: Optional[Target]):
    if target is None:
        return None
    c = tuple(float(v) for v in target.center) + (0.0,) * (3 - len(target.center))
    return (c[0], c[1], c[2], float(target.radius))


def _run_batch(cfg, dim, n_steps, rec, target, pos, state, has_spare, spare,
               record_positions, record_orientations, backend):
    n = state.size
    cap = np.empty(n, dtype=np.int64)
    pos_out = np.zeros((n, rec.size, dim)) if record_positions else None
    consts = step_constants(cfg)
    tgt = _target_tuple(target)
    if dim == 2:
        orient = np.zeros(n)
        orient_out = np.zeros((n, rec.size)) if record_orientations else None
        backend.run_2d(int(cfg.model), consts, n_steps, rec, True, tgt, pos, orient,
                       state, has_spare, spare, cap, pos_out, orient_out)
    elif dim == 3:
        orient = np.zeros((n, 3))
        orient_out = np.zeros((n, rec.size, 3)) if record_orientations else None
        backend.run_3d(int(cfg.model), consts, n_steps, rec, True, tgt, pos, orient,
                       state, has_spare, spare, cap, pos_out, orient_out)
    else:
        raise ValueError(f"dimension must be 2 or 3, got {dim}")
    return EnsembleResult(cfg.dt, n_steps, rec, cap, pos, pos_out, orient_out)


def simulate_ensemble(
    cfg: StepConfig,
    keys: Sequence[int] | np.ndarray,
    t_total: float,
    *,
    dim: int = 2,
    release: Sequence[float] = (0.0, 0.0, 0.0),
    target: Optional[Target] = None,
    record_steps: Optional[Sequence[int]] = None,
    record_positions: bool = True,
    record_orientations: bool = False,
    backend=None,
) -> EnsembleResult:
    """Run one trajectory per stream key from ``release``.

    Initial orientations are uniform (angle in 2D, sphere in 3D) and drawn
    from each trajectory's own stream, so the result depends only on the
    keys, never on batching or threads.
    """
    n_steps = steps_for(t_total, cfg.dt, "t_total")
    if record_steps is None:
        rec = np.arange(n_steps + 1, dtype=np.int64)
    else:
        rec = np.asarray(record_steps, dtype=np.int64)
    if rec.size and (np.any(np.diff(rec) <= 0) or rec[0] < 0 or rec[-1] > n_steps):
        raise ValueError("record_steps must be strictly increasing within [0, n_steps]")
    state = np.array(keys, dtype=np.uint64).reshape(-1)
    n = state.size
    pos = np.zeros((n, dim), dtype=np.float64)
    pos[:] = np.asarray(release, dtype=float)[:dim]
    return _run_batch(
        cfg, dim, n_steps, rec, target, pos, state,
        np.zeros(n, dtype=np.uint8), np.zeros(n, dtype=np.float64),
        record_positions, record_orientations, kernels if backend is None else backend,
    )


def ensemble_keys(master_seed: int, run_index: int, n_particles: int) -> np.ndarray:
    """Stream keys for trajectories ``0..n_particles-1`` of one run."""
    return stream_keys(master_seed, run_index, np.arange(n_particles))


def simulate_trajectory(
    release: Sequence[float],
    t_total: float,
    record_every: float,
    cfg: StepConfig,
    target: Optional[Target],
    stream: Stream | SeedSpec,
    *,
    backend=None,
) -> Trajectory:
    """Simulate one particle and record it on a uniform grid.

    The dimension follows ``len(release)``. A :class:`Stream` argument is
    advanced in place.
    """
    if isinstance(stream, SeedSpec):
        stream = Stream(stream.stream_key())
    dim = len(release)
    stride = steps_for(record_every, cfg.dt, "record_every")
    n_steps = steps_for(t_total, cfg.dt, "t_total")
    if stride == 0 or n_steps % stride:
        raise ValueError("t_total must be an integer multiple of record_every")
    rec = np.arange(0, n_steps + 1, stride, dtype=np.int64)
    state = np.array([stream.state], dtype=np.uint64)
    has_spare = np.array([stream.has_spare], dtype=np.uint8)
    spare = np.array([stream.spare], dtype=np.float64)
    pos = np.asarray(release, dtype=float).reshape(1, dim).copy()
    res = _run_batch(cfg, dim, n_steps, rec, target, pos, state, has_spare, spare,
                     True, True, kernels if backend is None else backend)
    stream.state = int(state[0])
    stream.has_spare = bool(has_spare[0])
    stream.spare = float(spare[0])
    return res.trajectories()[0]


def with_dt(cfg: StepConfig, dt: float) -> StepConfig:
    return replace(cfg, dt=dt)
