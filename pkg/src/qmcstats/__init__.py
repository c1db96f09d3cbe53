"""Output statistics of quantum Markov chains.

Given a Kraus family V_1, ..., V_k (sum V_i^dag V_i = 1) describing a
repeatedly measured quantum system, this package computes the stationary
law of length-m outcome strings, the scaled cumulant generating function
and large-deviation rate function of their empirical measures, and the
central-limit mean and covariance, all from the restricted spectral radius
of a tilted extension of the transition operator.  Finite-n moment
generating functions are available through two independent routes (an
iterated-operator formula and brute-force string enumeration), and a Monte
Carlo trajectory sampler cross-checks the analytic CLT and tail bounds.

Conventions: outcomes are 0-based; length-m strings are indexed by the
big-endian code sum_j i_j k^(m-j) (first outcome most significant);
matrices vectorize column-stacking style, vec(A X B) = (B^T kron A) vec(X).
"""

__version__ = "0.1.0"

from .exceptions import (
    QmcStatsError,
    ValidationError,
    BadDimensions,
    DimensionMismatch,
    NotUnitary,
    NormalizationViolation,
    NotOnSimplex,
    WindowTooLong,
    ParseError,
    UnknownModel,
    ParamOutOfRange,
    SizeCapExceeded,
    NotPrimitive,
    NumericalError,
    EigenSolverFailure,
    NonConvergence,
    DegeneratePerronEigenvalue,
    NumericalUnderflow,
)
from .channel import (
    KrausFamily,
    KrausValidation,
    SpectrumReport,
    apply_heisenberg,
    apply_schrodinger,
    kraus_from_unitary,
    require_primitive,
    spectrum_report,
    stationary_string_probabilities,
    superoperator_matrix,
    validate_kraus,
)
from .tilted import (
    BlockOperator,
    PerronData,
    SupportProjection,
    TiltVector,
    TiltedRestriction,
    apply_tilted,
    boundary_operator,
    code_tuple,
    perron_data,
    radius_gradient,
    restricted_matrix,
    support_projections,
    tuple_code,
)
from .ldp import (
    CltMoments,
    MgfResult,
    RatePoint,
    ScgfEvaluator,
    TailBound,
    clt_moments,
    finite_mgf_bruteforce,
    finite_mgf_lemma,
    rate_function,
    scgf,
    tail_rate_bound,
)
from .trajectory import (
    EmpiricalMeasure,
    McCltResult,
    TailEstimate,
    TailPoint,
    Trajectory,
    empirical_measure,
    ld_tail_estimate,
    monte_carlo_clt,
    rle_decode,
    rle_encode,
    sample_trajectory,
    trajectory_seed,
    window_codes,
)
from .models import (
    MODEL_NAMES,
    example_model,
    load_model,
    random_kraus_family,
    save_model,
)
from .sweep import SweepSpec, default_tilt_direction, run_sweep, sweep_spec_from_json

__all__ = [
    "__version__",
    # errors
    "QmcStatsError", "ValidationError", "BadDimensions", "DimensionMismatch",
    "NotUnitary", "NormalizationViolation", "NotOnSimplex", "WindowTooLong",
    "ParseError", "UnknownModel", "ParamOutOfRange", "SizeCapExceeded",
    "NotPrimitive", "NumericalError", "EigenSolverFailure", "NonConvergence",
    "DegeneratePerronEigenvalue", "NumericalUnderflow",
    # channel
    "KrausFamily", "KrausValidation", "SpectrumReport", "apply_heisenberg",
    "apply_schrodinger", "kraus_from_unitary", "require_primitive",
    "spectrum_report", "stationary_string_probabilities",
    "superoperator_matrix", "validate_kraus",
    # tilted extension
    "BlockOperator", "PerronData", "SupportProjection", "TiltVector",
    "TiltedRestriction", "apply_tilted", "boundary_operator", "code_tuple",
    "perron_data", "radius_gradient", "restricted_matrix",
    "support_projections", "tuple_code",
    # large deviations / CLT
    "CltMoments", "MgfResult", "RatePoint", "ScgfEvaluator", "TailBound",
    "clt_moments", "finite_mgf_bruteforce", "finite_mgf_lemma",
    "rate_function", "scgf", "tail_rate_bound",
    # trajectories
    "EmpiricalMeasure", "McCltResult", "TailEstimate", "TailPoint",
    "Trajectory", "empirical_measure", "ld_tail_estimate", "monte_carlo_clt",
    "rle_decode", "rle_encode", "sample_trajectory", "trajectory_seed",
    "window_codes",
    # models and sweeps
    "MODEL_NAMES", "example_model", "load_model", "random_kraus_family",
    "save_model", "SweepSpec", "default_tilt_direction", "run_sweep",
    "sweep_spec_from_json",
]
