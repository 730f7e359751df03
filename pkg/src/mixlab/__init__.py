"""Detecting mixing in Gaussian anomalous diffusion from a single trajectory."""
from .asymptotics import AsymptoticProfile, build_profile
from .errors import (
    ConvergenceError,
    MixlabError,
    NumericalInconsistencyError,
    UnsupportedRegimeError,
    ValidationError,
)
from .hermite import covariance_series, hermite_eval, trig_coefficients
from .inference import TestReport, bootstrap_theta, mixing_test
from .mc import McReport, emit_report, run_histogram_study, run_rate_study, run_size_study
from .models import ModelSpec, classify_regime, gamma_y, gamma_z, increment_law
from .sim import Path, read_path_csv, replicate_seeds, sample_path, write_path_csv
from .statistic import MixingStat, compute_stat, compute_stat_multi

__version__ = "0.1.0"
