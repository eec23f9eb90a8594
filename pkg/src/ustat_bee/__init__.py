"""ustat-bee: Studentized U-statistics, exact decomposition identities,
Berry-Esseen-type bound evaluators, and a seeded Monte Carlo harness."""

__version__ = "0.1.0"

from ._core import active_backend, compiled_available
from .bounds import (
    BoundParams,
    BridgeValues,
    MomentSummary,
    bennett_mgf_bound,
    bridge_quantities,
    lower_tail_bound,
    moment_bound_Un,
    nonuniform_bound_Tn,
    nonuniform_bound_tstat,
    subgaussian_sn_bound,
)
from .decomposition import (
    CensorSpec,
    CensoredTerms,
    DecompositionTerms,
    censor,
    censored_terms,
    decompose_statistic,
)
from .distributions import (
    DiscreteDistribution,
    NovakParams,
    SampleBatch,
    law_from_json,
    moment,
    novak_distribution,
    rademacher,
    sample,
    uniform_continuous,
    uniform_on,
    uniform_pairs,
)
from .engine import (
    StudentizedResult,
    self_normalized_sum,
    studentize,
    t_from_self_normalized,
    t_statistic,
    tn_from_tn_star,
    u_statistic,
)
from .kernels import (
    HoeffdingDecomposition,
    KernelSpec,
    builtin_kernel,
    center,
    decompose,
    is_nondegenerate,
    kernel_from_json,
    polynomial_kernel,
    product_kernel,
    sigma_of_kernel,
)
from .mc import (
    MCConfig,
    MCResult,
    NovakReport,
    estimate_cdf,
    exact_mean_cdf,
    novak_experiment,
    usual_form_term,
    verify_inequality,
)
from .sigma_kernel import (
    CensoringConstants,
    SigmaHatKernel,
    a_factor,
    build_sigma_hat_kernel,
    censoring_constants,
    sigma_hat_kernel_mean,
)
from .stein import (
    SteinSolution,
    f_x,
    f_x_prime,
    g_x,
    normal_cdf,
    normal_pdf,
    normal_sf,
    stein_residual,
)
