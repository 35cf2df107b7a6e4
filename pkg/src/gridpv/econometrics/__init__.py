"""Two-part instrumental-variable panel estimator and its diagnostics."""

from gridpv.econometrics.design import PanelSpec, RankDeficientError, cluster_vcov, fe_design
from gridpv.econometrics.linear import IvFit, OlsFit, anderson_rubin, fit_first_stage, vif
from gridpv.econometrics.twopart import (CF, AmeEstimate, ConvergenceError, GlmFit,
                                         SeparationError, TwoPartFit, average_marginal_effect,
                                         cluster_bootstrap, fit_glm_log, fit_logit, fit_two_part,
                                         glm_log_gauss, logit_irls, marginal_effects,
                                         predictive_margins, two_part_expectation)

__all__ = [
    "PanelSpec", "RankDeficientError", "cluster_vcov", "fe_design", "IvFit", "OlsFit",
    "anderson_rubin", "fit_first_stage", "vif", "CF", "AmeEstimate", "ConvergenceError",
    "GlmFit", "SeparationError", "TwoPartFit", "average_marginal_effect", "cluster_bootstrap",
    "fit_glm_log", "fit_logit", "fit_two_part", "glm_log_gauss", "logit_irls",
    "marginal_effects", "predictive_margins", "two_part_expectation",
]
