"""Human-in-the-loop Bayesian-optimized active recommender over spectral grids."""

from .engine import AcquisitionSpec, BOConfig, MapSet, RunRecord, run_boars
from .grid import (
    GridIndex,
    Patch,
    SimulatedInstrument,
    SpectralGrid,
    Spectrum,
    SyntheticConfig,
    generate_synthetic_grid,
    load_dataset,
    save_dataset,
)
from .recommender import Phase, TargetState
from .similarity import SsimParams, auto_objective, human_objective, ssim
from .surrogate import TrainConfig, fit_gp, posterior
from .voters import ReplayVoter, ThresholdVoter

__version__ = "0.1.0"
