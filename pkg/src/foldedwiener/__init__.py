"""Average-case optimal approximation under the folded Wiener sheet measure.

Kernel calculus, hyperbolic-cross designs, exact average errors of linear
sampling algorithms, covariance spectra and Monte Carlo cross-checks.
"""

from .curves import (
    CurveConfig,
    ErrorCurve,
    RateFit,
    compare_designs,
    complexity_estimate,
    fit_rate,
    run_curve,
)
from .designs import (
    Design,
    Provenance,
    grid,
    h_inv,
    h_map,
    hyperbolic_cross,
    map_design,
    random_design,
)
from .error import (
    ErrorReport,
    LinearAlgorithm,
    QuadratureRule,
    all_info_error,
    avg_error,
    pointwise_variance,
    predict,
    worst_error_bound,
)
from .fieldsim import mc_avg_error, sample_field
from .kernel import GramFactorization, ProblemSpec, cov, factor1d, gram, rkhs_norm_sq
from .spectrum import Spectrum, eig1d, spectrum_1d, tail_exponent_fit, tensor_spectrum

__version__ = "0.1.0"
