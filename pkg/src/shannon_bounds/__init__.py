"""Shannon lower and upper bounds on quadratic rate-distortion functions.

Bounds come in matched pairs: the lower side uses entropy powers and the
upper side uses variances, so the two coincide for Gaussian inputs.
Numerical oracles (Blahut-Arimoto, brute-force covariance searches) are
provided to check them.
"""

from .dist_core import (
    AdditiveNoiseModel,
    BivariateGaussian,
    BivariateGaussianMixture,
    BivariateSource,
    Gaussian,
    GaussianMixture,
    Gridded,
    GriddedJoint,
    Laplace,
    ScalarSource,
    Uniform,
    conditional_entropy_power,
    convolve,
    differential_entropy,
    entropy_power,
    joint_entropy,
    joint_entropy_power,
    kl_to_gaussian,
    linear_mmse,
    mmse,
    product_joint,
    variance,
)
from .bounds_point import (
    BoundPair,
    VariationalCertificate,
    classic_rd_bounds,
    conditional_rd_bounds,
    max_det_distortion,
    mmse_estimation_bounds,
    raw_estimation_bounds,
    sum_distortion_rd_bounds,
    variational_lower_bound,
    vector_rd_bounds,
    wyner_ziv_rd_bounds,
    wz_auxiliary_rate_distortion,
    wz_auxiliary_rho_for_delta,
)
from .bounds_remote import (
    RemoteReduction,
    additive_noise_remote_bounds,
    awgn_remote_bounds,
    posterior_mean_reduction,
    remote_rd_bounds,
)
from .bounds_network import (
    CEOQuery,
    GrayWynerQuery,
    GWConstruction,
    ceo_sum_rate_bounds,
    gray_wyner_bounds,
    gw_construction,
    gw_lagrangian,
    gw_lemma2_rhs,
    gw_nu_star,
)
from .oracle_ba import (
    BASolution,
    DiscretizedSource,
    blahut_arimoto_rd,
    conditional_rd_oracle,
    d_matrix_search,
    discretize,
    lemma2_covariance_search,
    rd_at_distortion,
    remote_rd_oracle,
)
from .sourcefile import describe, load_source, source_from_dict
from .errors import (
    InfeasibleDistortion,
    InvalidCertificate,
    NumericalFailure,
    PreconditionError,
    SourceError,
)

__version__ = "0.1.0"
