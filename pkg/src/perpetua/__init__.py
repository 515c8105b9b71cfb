"""perpetua: lattice iteration and certified error bounds for perpetuities.

Approximates the law of X = AX + b (the fixed point of the associated
contraction on distributions) by iterating a discretised update on a
lattice PMF, and certifies L_p, Kolmogorov and density sup-norm errors of
the result.
"""

__version__ = "0.1.0"

from .model import (CoefficientBranch, ContractionError, DiscretisationSchedule,
                    MomentProvider, PerpetuitySpec, ScheduleOverflowError, UMode,
                    discretise_u, error_constants, schedule_s, xi_bound)
from .lattice import (DensityEstimate, LatticePMF, SupportBound, cdf,
                      extract_density, kolmogorov_vs, support_q)
from .iterator import (IterationPlan, IterationResult, initialize, op_count_model,
                       run, update)
from .bounds import (BootstrapResult, DensityCertificate, ErrorTermModel,
                     KolmogorovCertificate, LpBound, ModulusSpec,
                     bootstrap_density_bound, density_certificate, holder,
                     kolmogorov_from_lp, linear, lp_bound_closed, lp_bound_direct,
                     optimize_p, rate_constant_exp, rate_constant_poly)
from .presets import (ax1_uniform_spec, get_preset, interval_splitting_spec,
                      quickselect_spec, spec_from_config)
from .oracle import McConfig, McResult, default_truncation, dkw_band, sample

__all__ = [
    "__version__",
    "CoefficientBranch", "ContractionError", "DiscretisationSchedule",
    "MomentProvider", "PerpetuitySpec", "ScheduleOverflowError", "UMode",
    "discretise_u", "error_constants", "schedule_s", "xi_bound",
    "DensityEstimate", "LatticePMF", "SupportBound", "cdf",
    "extract_density", "kolmogorov_vs", "support_q",
    "IterationPlan", "IterationResult", "initialize", "op_count_model",
    "run", "update",
    "BootstrapResult", "DensityCertificate", "ErrorTermModel",
    "KolmogorovCertificate", "LpBound", "ModulusSpec",
    "bootstrap_density_bound", "density_certificate", "holder",
    "kolmogorov_from_lp", "linear", "lp_bound_closed", "lp_bound_direct",
    "optimize_p", "rate_constant_exp", "rate_constant_poly",
    "ax1_uniform_spec", "get_preset", "interval_splitting_spec",
    "quickselect_spec", "spec_from_config",
    "McConfig", "McResult", "default_truncation", "dkw_band", "sample",
]
