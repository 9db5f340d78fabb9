"""Entropy of the k-th largest order statistic and of its extreme value limit laws."""

__version__ = "0.1.0"

from .errors import DomainError, KextError, NumericError, TieError
from .estimate import EntropyEstimate
from .finite_n import (
    ConvergenceReport,
    FiniteModel,
    convergence_report,
    entropy_gnk,
    i1_exact,
    i1_limit,
    normalization,
    pdf_gnk,
    sup_density_gap,
)
from .laws import (
    Family,
    KExtremeLaw,
    LimitLaw,
    cdf_k,
    entropy_closed_form,
    entropy_quadrature,
    pdf_k,
    quantile_k,
)
from .parents import (
    DomainTag,
    NormingConstants,
    ParentDistribution,
    auxiliary_u,
    catalog,
    classify_domain,
    norming_constants,
    parse_parent,
)
from .quadrature import QuadratureResult, integrate
from .sampling import (
    RandomStream,
    SampleBatch,
    mc_convergence,
    sample_kth_extreme,
    spacing_entropy,
)
from .special import EULER_GAMMA, a_integral, digamma_int, harmonic, log_beta, log_gamma
