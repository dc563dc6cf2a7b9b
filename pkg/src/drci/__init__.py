"""Conditional independence testing via two-stage density-ratio regression.

The test targets the null "x independent of y given z".  A first sieve
least-squares stage estimates the ratio of the product of the y- and
z-marginals to their joint density; a second, ratio-weighted stage estimates
the conditional density ratio, which equals one exactly under the null.  The
standardized weighted quadratic distance of that fit from one is compared to
the upper standard-normal quantile.  A smoothed-bootstrap selection picks
the sieve bases subject to size control.
"""

from .basis import BasisSpec, Monomial, candidate_grid, eval_u, eval_v
from .errors import (
    CollinearBasisError,
    ConfigurationError,
    DataError,
    DegenerateStatisticError,
    DrciError,
    EstimationError,
    GenerationError,
)
from .estimator import DensityRatioCIT
from .ranks import RankTransformer, rank_transform
from .ratios import (
    CondRatioFit,
    UncondRatioFit,
    balance_residuals,
    eval_pi,
    eval_r,
    fit_conditional,
    fit_unconditional,
)
from .sample import Sample, lagged_triples
from .simulation import (
    DGP_NAMES,
    DgpSpec,
    McConfig,
    McReport,
    generate,
    linear_granger_test,
    log_diff_transform,
    monte_carlo,
)
from .statistic import (
    TestResult,
    compute_B,
    compute_I,
    compute_sigma,
    influence_matrix,
    run_test,
    statistic_forms,
)
from .tuning import (
    TuningConfig,
    TuningReport,
    bandwidth,
    rejection_frequency,
    select_basis,
    smoothed_bootstrap_sample,
)

__version__ = "0.1.0"

__all__ = [
    "BasisSpec", "Monomial", "candidate_grid", "eval_u", "eval_v",
    "DrciError", "DataError", "ConfigurationError", "EstimationError",
    "CollinearBasisError", "DegenerateStatisticError", "GenerationError",
    "DensityRatioCIT", "RankTransformer", "rank_transform",
    "UncondRatioFit", "CondRatioFit", "fit_unconditional", "fit_conditional",
    "eval_r", "eval_pi", "balance_residuals",
    "Sample", "lagged_triples",
    "DGP_NAMES", "DgpSpec", "McConfig", "McReport", "generate",
    "linear_granger_test", "log_diff_transform", "monte_carlo",
    "TestResult", "compute_I", "compute_B", "compute_sigma",
    "influence_matrix", "run_test", "statistic_forms",
    "TuningConfig", "TuningReport", "bandwidth", "rejection_frequency",
    "select_basis", "smoothed_bootstrap_sample",
    "__version__",
]
