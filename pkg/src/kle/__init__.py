"""Truncated Karhunen-Loeve expansions of random fields on an interval.

The covariance eigenproblem is discretized with the Nystrom method on a
quadrature rule; the resulting modes are used to sample Gaussian fields
and to check the spectral identities numerically.
"""

from .discrete_kle import (
    SampleEnsemble,
    VectorKLE,
    empirical_covariance,
    ky_fan_gap,
    project,
    reconstruct,
    select_rank,
    truncation_error,
    variance_ratio,
    vector_kle,
)
from .eigen import SpectralDecomposition, eigenfunctions, nystrom_eigen, nystrom_extend, solve_symmetric_eigen
from .errors import (
    DegenerateModeError,
    InadmissibleKernelError,
    InsufficientSpectrumError,
    InvalidArgumentError,
    KLEError,
    NumericError,
)
from .field import (
    CustomMean,
    FieldEnsemble,
    GridMean,
    TruncatedKLE,
    ZeroMean,
    average_variance,
    build_truncated_kle,
    evaluate,
    log_normal_field,
    pointwise_variance,
    sample,
)
from .kernels import (
    BrownianMin,
    Constant,
    Custom,
    Exponential,
    KernelSpec,
    admissibility_check,
    eval_kernel,
    kernel_from_dict,
    kernel_matrix,
)
from .quadrature import Interval, QuadratureRule, integrate, make_gauss_legendre, make_trapezoid

__version__ = "0.1.0"
