"""Bayesian sample size determination for replication studies.

Build a design prior from an original study, compute the probability of
replication success (pors) for an analysis method, and solve for the
replication sample size that reaches a target pors.

>>> from repssd import EffectEstimate, MethodConfig, design_prior, ssd
>>> dp = design_prior(EffectEstimate(0.205, 0.051), tau2=0.05**2)
>>> res = ssd(dp, MethodConfig("two-trials", alpha=0.025), target=0.8)
>>> res.n_r
1137
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import (BracketError, DomainError, InfeasibleOriginalError,
                     IntegrationError, ReplicationDesignError, UnsupportedDesignError)
from .methods import (Method, MethodConfig, PorsResult, SuccessRegion, lim_pr, pors,
                      pors_at, pors_monte_carlo, pors_result, pors_tau_marginal,
                      region_builder, rep_bf, success_region)
from .model import (DesignPrior, EffectEstimate, GroupSummary, InitialPrior,
                    PredictiveDist, conditional_design_prior, design_prior,
                    empirical_bayes_variance, n_to_se, point_null_design_prior,
                    predictive, se_to_n, shrinkage_prior, smd_from_groups,
                    tau_absolute, tau_relative, update_with_pilot)
from .multisite import (CostModel, MultisiteDesign, cost_curve, optimal_m,
                        optimal_site_size, pors_multisite, pors_multisite_mc,
                        ssd_multisite)
from .ssd import (Constraints, SSDResult, Status, check_constraints, ssd, ssd_all,
                  ssd_generic, type_one_error)

__all__ = [
    "BACKEND", "BracketError", "DomainError", "InfeasibleOriginalError",
    "IntegrationError", "ReplicationDesignError", "UnsupportedDesignError",
    "Method", "MethodConfig", "PorsResult", "SuccessRegion", "lim_pr", "pors",
    "pors_at", "pors_monte_carlo", "pors_result", "pors_tau_marginal",
    "region_builder", "rep_bf", "success_region",
    "DesignPrior", "EffectEstimate", "GroupSummary", "InitialPrior", "PredictiveDist",
    "conditional_design_prior", "design_prior", "empirical_bayes_variance", "n_to_se",
    "point_null_design_prior", "predictive", "se_to_n", "shrinkage_prior",
    "smd_from_groups", "tau_absolute", "tau_relative", "update_with_pilot",
    "CostModel", "MultisiteDesign", "cost_curve", "optimal_m", "optimal_site_size",
    "pors_multisite", "pors_multisite_mc", "ssd_multisite",
    "Constraints", "SSDResult", "Status", "check_constraints", "ssd", "ssd_all",
    "ssd_generic", "type_one_error",
]
