"""GLRT detectors for range-spread radar targets with unknown Doppler.

Modules
-------
linalg      small dense Hermitian linear algebra
scene       scenarios, noise and target generation
detectors   OS-GLRT, MRS and the shared sufficient statistics
sdpsolver   SDP detector (interior point) and the grid-search oracle
bench       Monte Carlo calibration, Pd curves, CFAR scans and timing
"""

from .detectors import (
    DetectorId,
    DetectorStatistic,
    SufficientStats,
    alpha_mle,
    det_form_lrt,
    mrs_stat,
    os_glrt_stat,
    sufficient_stats,
    whiten_pair,
)
from .linalg import NotPositiveDefiniteError
from .scene import Hypothesis, Scenario, TargetModel, make_trial, steering_vector, trial_rng
from .sdpsolver import build_problem, grid_oracle, sdp_stat, solve_sdp

__version__ = "0.1.0"

__all__ = [
    "DetectorId",
    "DetectorStatistic",
    "Hypothesis",
    "NotPositiveDefiniteError",
    "Scenario",
    "SufficientStats",
    "TargetModel",
    "alpha_mle",
    "build_problem",
    "det_form_lrt",
    "grid_oracle",
    "make_trial",
    "mrs_stat",
    "os_glrt_stat",
    "sdp_stat",
    "solve_sdp",
    "steering_vector",
    "sufficient_stats",
    "trial_rng",
    "whiten_pair",
]
