"""Delayed, anticipatory ACC cut-in dynamics and stochastic safety analysis.

The package solves the delayed linear car-following system analytically
through the matrix Lambert W function (branch matrices, spectral
response, rightmost-eigenvalue stability) and runs cut-in scenario
simulations and population-level time-to-collision experiments on top
of it.  Hot stepping kernels are compiled (Cython) when available, with
a bit-identical pure-Python fallback.
"""

__version__ = "0.1.0"

from ._backend import backend_name
from .errors import (AccwError, CollocationError, ConvergenceError,
                     DefectiveMatrixError, NumericalError, ValidationError)
from .forcing import PiecewiseConstant
from .integrate import DdeTrajectory, integrate_oracle
from .lambertw import MatrixWResult, matrix_w, scalar_w
from .population import Population, SamplerSpec, filter_stable, load, save, synth_sample
from .safety import (Axis, SafetyAggregate, SweepGrid, TtcResult, aggregate,
                     anticipation_outcome, sweep, time_to_collision)
from .scenario import (FULL_FEEDBACK, WORST_CASE, CutInProfile,
                       InitialKinematics, ScenarioConfig, Trajectory,
                       cutin_accel, min_gap, simulate)
from .spectral import (BranchSolution, SpectralSolution, eval_response,
                       forced_coefficients, free_coefficients, solve_branch,
                       spectral_solve)
from .stability import (StabilityVerdict, classify_growth, growth_rate,
                        oracle_verdict, stability_scan, stable_no_delay,
                        stable_with_delay)
from .system import ParamSet, SystemMatrices, TABLE_PARAMS, build_system

__all__ = [
    "AccwError", "Axis", "BranchSolution", "CollocationError",
    "ConvergenceError", "CutInProfile", "DdeTrajectory",
    "DefectiveMatrixError", "FULL_FEEDBACK", "InitialKinematics",
    "MatrixWResult", "NumericalError", "ParamSet", "PiecewiseConstant",
    "Population", "SafetyAggregate", "SamplerSpec", "ScenarioConfig",
    "SpectralSolution", "StabilityVerdict", "SweepGrid", "SystemMatrices",
    "TABLE_PARAMS", "Trajectory", "TtcResult", "ValidationError",
    "WORST_CASE", "aggregate", "anticipation_outcome", "backend_name",
    "build_system", "classify_growth", "cutin_accel", "eval_response",
    "filter_stable", "forced_coefficients", "free_coefficients",
    "growth_rate", "integrate_oracle", "load", "matrix_w", "min_gap",
    "oracle_verdict", "save", "scalar_w", "simulate", "solve_branch",
    "spectral_solve", "stability_scan", "stable_no_delay",
    "stable_with_delay", "sweep", "synth_sample", "time_to_collision",
]
