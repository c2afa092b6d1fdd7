"""Bayesian iterative screening for ultra-high-dimensional linear regression."""

from .baselines import BaselineResult, fr_screen, holp_rank, sis_rank
from .design import (
    CenteredResponse,
    StandardizedDesign,
    TriangularFactor,
    center_response,
    cholesky_append,
    standardize,
    tri_solve_lower,
    tri_solve_upper,
)
from .engine import (
    ScreeningResult,
    ScreeningState,
    StopReason,
    bits_first_step,
    bits_iterate,
    bits_screen,
    bits_second_step,
)
from .estimators import BITSScreener, FRScreener, HOLPScreener, SISScreener
from .exceptions import BitsError, ConfigError, DimensionError, InputError, NumericalBreakdown
from .posterior import (
    Hyperparams,
    RidgePartials,
    log_posterior_exact,
    log_posterior_ratio_via_partials,
    oracle_greedy_path,
    posterior_ratio_via_partials,
    ridge_partials,
)
from .stopping import StopRule, ebic_decide, ebic_default_cap, fixed_size_decide, pp_decide, pp_largest_drop_decide

__version__ = "0.1.0"
