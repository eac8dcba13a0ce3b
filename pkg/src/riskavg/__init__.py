"""Kernel-weighted averaging-robust risk measures.

The averaged risk replaces the supremum over an uncertainty ball with a
kernel-weighted mean of a baseline risk functional over the ball.
"""
__version__ = "0.1.0"

from .errors import (ConfigError, ConvergenceError, DomainError, EmptyBallError, RiskAvgError,
                     TailUnderflowError)
from .risk import (GaussianLaw, RiskFunctional, SpectralWeight, es_constant, es_empirical,
                   es_gaussian, entropic_gaussian, spectral_risk_gaussian)
from .kernel import (BallSpec, GaussianSampler, KernelSpec, MCEstimate, WeightedCloud,
                     avg_risk_discrete, avg_risk_mc, large_r_limit_mc, radius_sweep)
from .chisq import ChiSqParams, cdf_ratio, noncentral_cdf_dlambda, noncentral_chisq_cdf
from .hilbert import (conditional_mean_v1, noncommuting_limits_table, rho_linear_finite_n,
                      rho_linear_mc, rho_quadratic_components)
from .aggregation import LawMixture, es_mixture, quantile_aggregate, spectral_risk_quantile
from .bayes import (NormalGammaPrior, dominance_chain, rho_avg_bayes, sensitivity_sweep,
                    w2_gaussian, worst_case_es)

__all__ = [name for name in dir() if not name.startswith("_")]
