"""Seedable per-trajectory random streams.

Every trajectory owns a SplitMix64 stream whose 64-bit starting state is a
hash of ``(master_seed, run_index, trajectory_index)``. Since nothing is shared
between trajectories, the simulator output does not depend on the order in
which trajectories are executed or on how many threads execute them.

The compiled kernel carries an exact C copy of :meth:`Stream.next_u64`,
:meth:`Stream.uniform` and :meth:`Stream.gaussian`; any change here must be
mirrored in ``_kernels.pyx``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
TWO_PI = 2.0 * math.pi
_INV_2_53 = 1.0 / 9007199254740992.0

# Domain separation between the three seed components.
_SALT_MASTER = 0x243F6A8885A308D3
_SALT_RUN = 0x13198A2E03707344
_SALT_TRAJ = 0xA4093822299F31D0


def mix64(z: int) -> int:
    """SplitMix64 finalizer; a bijection on 64-bit integers."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    run_index: int = 0
    trajectory_index: int = 0

    def __post_init__(self):
        for name in ("master_seed", "run_index", "trajectory_index"):
            value = getattr(self, name)
            if not 0 <= value <= MASK64:
                raise ValueError(f"{name} must be in [0, 2**64), got {value}")

    def stream_key(self) -> int:
        return stream_key(self.master_seed, self.run_index, self.trajectory_index)


def stream_key(master_seed: int, run_index: int, trajectory_index: int) -> int:
    """Initial SplitMix64 state for one trajectory."""
    h = mix64(master_seed ^ _SALT_MASTER)
    h = mix64(h ^ mix64(run_index ^ _SALT_RUN))
    return mix64(h ^ mix64(trajectory_index ^ _SALT_TRAJ))


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def stream_keys(master_seed: int, run_index: int, trajectory_indices) -> np.ndarray:
    """Vectorized :func:`stream_key` over trajectory indices."""
    h = np.uint64(mix64(mix64(master_seed ^ _SALT_MASTER) ^ mix64(run_index ^ _SALT_RUN)))
    t = np.asarray(trajectory_indices, dtype=np.uint64) ^ np.uint64(_SALT_TRAJ)
    with np.errstate(over="ignore"):
        return _mix64_array(h ^ _mix64_array(t))


class Stream:
    """SplitMix64 generator with Marsaglia polar normals.

    The second normal of each polar pair is cached, so the full stream state
    is ``(state, has_spare, spare)``.
    """

    __slots__ = ("state", "has_spare", "spare")

    def __init__(self, state: int, has_spare: bool = False, spare: float = 0.0):
        self.state = state & MASK64
        self.has_spare = has_spare
        self.spare = spare

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def uniform(self) -> float:
        """Uniform double on [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * _INV_2_53

    def gaussian(self) -> float:
        if self.has_spare:
            self.has_spare = False
            return self.spare
        while True:
            u = 2.0 * self.uniform() - 1.0
            v = 2.0 * self.uniform() - 1.0
            s = u * u + v * v
            if 0.0 < s < 1.0:
                break
        m = math.sqrt((-2.0 * math.log(s)) / s)
        self.spare = v * m
        self.has_spare = True
        return u * m

    def uniform_angle(self) -> float:
        return TWO_PI * self.uniform()

    def unit_vector3(self) -> tuple[float, float, float]:
        """Uniform point on the unit sphere (Archimedes' projection)."""
        z = 2.0 * self.uniform() - 1.0
        az = TWO_PI * self.uniform()
        rho = math.sqrt(max(0.0, 1.0 - z * z))
        return rho * math.cos(az), rho * math.sin(az), z

    def copy(self) -> "Stream":
        return Stream(self.state, self.has_spare, self.spare)

    def __repr__(self):
        return f"Stream(state=0x{self.state:016x}, has_spare={self.has_spare})"


def derive_stream(spec: SeedSpec) -> Stream:
    return Stream(spec.stream_key())


def gaussian(stream: Stream) -> float:
    """Standard normal draw."""
    return stream.gaussian()


def uniform_angle(stream: Stream) -> float:
    """Angle uniform on [0, 2*pi)."""
    return stream.uniform_angle()
