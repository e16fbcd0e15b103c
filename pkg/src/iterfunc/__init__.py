"""Nonparametric utility and type-distribution estimation from two price regimes."""
from ._backend import backend_name
from .bootstrap import BootstrapBands, bootstrap_cdf, bootstrap_pipeline, draw_multipliers
from .config import EstimationConfig
from .endogenous import (ThetaEstimate, conditional_cdf_epsilon, estimate_with_covariates,
                         iv_estimate_theta, price_residuals, r_hat_from_theta,
                         structural_residuals)
from .errors import (BootstrapError, DensityError, IdentificationError, IterfuncError,
                     OrientationError, SampleError, SimulationError)
from .kernel import AnalyticDistribution, SmoothedDistribution, cv_bandwidth, smooth_cdf
from .montecarlo import bootstrap_coverage, run_monte_carlo
from .orientation import Orientation, beta_step, detect_orientation, identify_tau, iterate_beta
from .pipeline import PairEstimate, elasticity_grid, estimate_pair
from .sample_io import Sample, load_sample, normalize_pair, normalize_sample, write_sample
from .schedules import PriceSchedule
from .solver import QuantileSolution, residual_check, solve_lambda, truncation_bound
from .tikhonov import tikhonov_comparator
from .utility import (UtilityEstimate, elasticity_convex, elasticity_curvature, elasticity_level,
                      reconstruct_utility, second_derivative_utility)

__version__ = "0.1.0"
