"""Motion coefficients and mean-squared-displacement formulas.

Units throughout the simulator are micrometres, seconds and radians. The
Stokes-Einstein relations are evaluated once in SI and converted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .models import Model

BOLTZMANN = 1.38064852e-23  # J/K
WATER_VISCOSITY = 1.0016e-3  # Pa s
DEFAULT_TEMPERATURE = 293.0  # K

_M2_TO_UM2 = 1e12


@dataclass(frozen=True)
class PhysicalParams:
    """Raw physical inputs.

    ``tumble_rate=None`` means "equal to the rotational diffusion
    coefficient", the setting under which RTP and ABP share one MSD.
    """

    particle_radius: float = 0.5  # um
    temperature: float = DEFAULT_TEMPERATURE
    viscosity: float = WATER_VISCOSITY
    speed: float = 10.0  # um/s
    omega: float = 1.0  # rad/s
    tumble_rate: Optional[float] = None  # 1/s

    def __post_init__(self):
        for name in ("particle_radius", "temperature", "viscosity"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be > 0, got {value}")
        if not self.speed >= 0:
            raise ValueError(f"speed must be >= 0, got {self.speed}")
        if self.tumble_rate is not None and not self.tumble_rate >= 0:
            raise ValueError(f"tumble_rate must be >= 0, got {self.tumble_rate}")
        if not math.isfinite(self.omega):
            raise ValueError(f"omega must be finite, got {self.omega}")


@dataclass(frozen=True)
class MotionCoefficients:
    D_T: float  # um^2/s
    D_R: float  # rad^2/s
    persistence_length: float  # um
    persistence_time: float  # s

    @classmethod
    def from_diffusion(cls, D_T: float, D_R: float, speed: float) -> "MotionCoefficients":
        """Build coefficients directly, bypassing Stokes-Einstein.

        ``D_R = 0`` is allowed here for noise-free checks; the derived scales
        become infinite.
        """
        if D_T < 0 or D_R < 0:
            raise ValueError("diffusion coefficients must be non-negative")
        if D_R == 0:
            return cls(D_T, D_R, math.inf, math.inf)
        return cls(D_T, D_R, speed / D_R, 1.0 / D_R)


def derive_coefficients(p: PhysicalParams) -> MotionCoefficients:
    """Stokes-Einstein translational and rotational diffusion of a sphere."""
    r_m = p.particle_radius * 1e-6
    kT = BOLTZMANN * p.temperature
    d_t = kT / (6.0 * math.pi * p.viscosity * r_m) * _M2_TO_UM2
    d_r = kT / (8.0 * math.pi * p.viscosity * r_m**3)
    return MotionCoefficients(d_t, d_r, p.speed / d_r, 1.0 / d_r)


def tumble_rate(coeffs: MotionCoefficients, params: PhysicalParams) -> float:
    return coeffs.D_R if params.tumble_rate is None else params.tumble_rate


def chiral_phase(D_R: float, omega: float) -> float:
    """Phase offset of the chiral MSD.

    Only its cosine is pinned by the MSD formula; the sign of the sine follows
    omega, which keeps the MSD continuous at omega = 0 and even in omega.
    """
    return math.atan2(2.0 * D_R * omega, D_R * D_R - omega * omega)


def _persistent_term(v: float, rate: float, t):
    # 2 v^2 t / rate - 2 v^2 (1 - exp(-rate t)) / rate^2, with the rate -> 0
    # ballistic limit v^2 t^2 handled explicitly.
    if rate == 0:
        return v * v * t * t
    return 2 * v * v * t / rate - 2 * v * v * (-np.expm1(-rate * t)) / rate**2


def msd_closed_form(
    model: Model | str,
    coeffs: MotionCoefficients,
    params: PhysicalParams,
    t,
):
    """Closed-form 2D mean squared displacement in um^2.

    Accepts a scalar or array ``t``; scalars come back as ``float``.
    """
    model = Model.parse(model)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("time must be non-negative")
    v = params.speed
    D_T, D_R = coeffs.D_T, coeffs.D_R
    out = 4 * D_T * t_arr
    if model is Model.ABP:
        out = out + _persistent_term(v, D_R, t_arr)
    elif model is Model.RTP:
        out = out + _persistent_term(v, tumble_rate(coeffs, params), t_arr)
    elif model is Model.CHIRAL_ABP:
        w = params.omega
        if w == 0:
            out = out + _persistent_term(v, D_R, t_arr)
        else:
            denom = D_R * D_R + w * w
            cos_phi0 = (D_R * D_R - w * w) / denom
            sin_phi0 = 2 * D_R * w / denom
            # cos(w t + phi0) expanded so the t = 0 value cancels exactly.
            cos_shift = np.cos(w * t_arr) * cos_phi0 - np.sin(w * t_arr) * sin_phi0
            out = (
                out
                + 2 * v * v * D_R * t_arr / denom
                + 2 * v * v * (np.exp(-D_R * t_arr) * cos_shift - cos_phi0) / denom
            )
    if out.ndim == 0:
        return float(out)
    return out


def _ramp_integral(rate: float, omega: float, t):
    """Re of int_0^t (t - s) exp(-(rate - i omega) s) ds."""
    z = complex(rate, -omega)
    t = np.asarray(t, dtype=float)
    if z == 0:
        return 0.5 * t * t
    return np.real(t / z - (-np.expm1(-z * t)) / (z * z))


def msd_closed_form_3d(
    model: Model | str,
    coeffs: MotionCoefficients,
    params: PhysicalParams,
    t,
    chiral_axis_lab: bool = True,
):
    """3D mean squared displacement for the 3D steppers in :mod:`dynamics`.

    Uses MSD = 6 D_T t + 2 v^2 int_0^t (t - s) C(s) ds with the heading
    autocorrelation C: exp(-2 D_R s) for ABP, exp(-alpha s) for RTP with
    full reorientation, and exp(-2 D_R s) (1 + 2 cos(omega s)) / 3 for
    chiral precession about a fixed lab axis averaged over isotropic starts.
    """
    model = Model.parse(model)
    if not chiral_axis_lab:
        raise NotImplementedError("only lab-fixed chiral axes have a closed form here")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("time must be non-negative")
    v = params.speed
    D_R = coeffs.D_R
    out = 6 * coeffs.D_T * t_arr
    if model is Model.ABP:
        out = out + 2 * v * v * _ramp_integral(2 * D_R, 0.0, t_arr)
    elif model is Model.RTP:
        out = out + 2 * v * v * _ramp_integral(tumble_rate(coeffs, params), 0.0, t_arr)
    elif model is Model.CHIRAL_ABP:
        w = params.omega
        out = out + 2 * v * v * (
            _ramp_integral(2 * D_R, 0.0, t_arr) + 2 * _ramp_integral(2 * D_R, w, t_arr)
        ) / 3
    if out.ndim == 0:
        return float(out)
    return out


@dataclass
class MsdSeries:
    times: np.ndarray
    values: np.ndarray
    stderr: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have the same length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


def empirical_msd(
    positions: np.ndarray,
    record_times: Sequence[float],
    sample_times: Optional[Sequence[float]] = None,
) -> MsdSeries:
    """Ensemble MSD from recorded positions.

    Parameters
    ----------
    positions : array, shape (n_traj, n_records, dim)
        Recorded positions. Trajectories must come from target-free runs.
    record_times : sequence of float
        The recording grid, one entry per record.
    sample_times : sequence of float, optional
        Subset of ``record_times`` to evaluate; defaults to the whole grid.

    Returns
    -------
    MsdSeries
        Mean of ``|r(t) - r(0)|^2`` and its standard error.
    """
    positions = np.asarray(positions, dtype=float)
    if positions.ndim != 3 or positions.shape[0] == 0:
        raise ValueError("need a non-empty ensemble of shape (n_traj, n_records, dim)")
    record_times = np.asarray(record_times, dtype=float)
    if positions.shape[1] != record_times.size:
        raise ValueError("record_times does not match the recorded positions")
    if sample_times is None:
        idx = np.arange(record_times.size)
    else:
        idx = []
        tol = 1e-9 * max(1.0, float(record_times[-1]))
        for t in sample_times:
            k = int(np.argmin(np.abs(record_times - t)))
            if abs(record_times[k] - t) > tol:
                raise ValueError(f"sample time {t} is not on the recording grid")
            idx.append(k)
        idx = np.asarray(idx)
    disp = positions[:, idx, :] - positions[:, :1, :]
    sq = np.einsum("nkd,nkd->nk", disp, disp)
    n = sq.shape[0]
    values = sq.mean(axis=0)
    if n > 1:
        stderr = sq.std(axis=0, ddof=1) / math.sqrt(n)
    else:
        stderr = np.zeros_like(values)
    return MsdSeries(record_times[idx], values, stderr)
