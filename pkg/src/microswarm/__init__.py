"""Monte Carlo capture efficiency of active particles (ABP, RTP, chiral ABP, PBP)."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .analytics import (
    MotionCoefficients,
    MsdSeries,
    PhysicalParams,
    derive_coefficients,
    empirical_msd,
    msd_closed_form,
    msd_closed_form_3d,
)
from .capture import EfficiencySeries, Target, aggregate_runs, capture_efficiency, check_capture
from .dynamics import (
    ParticleState2D,
    ParticleState3D,
    StepConfig,
    Trajectory,
    simulate_ensemble,
    simulate_trajectory,
    step_2d,
    step_3d,
)
from .experiments import (
    ConfigError,
    ExperimentConfig,
    ResultTable,
    run_3d,
    run_distance_sweep,
    run_msd_experiment,
    run_omega_sweep,
)
from .models import Model
from .stochastics import SeedSpec, Stream, derive_stream, gaussian, uniform_angle
