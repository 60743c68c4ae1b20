"""Plug-in estimation of risk measures, their concentration, and risk-averse bandits."""
from .distributions import DistSpec, Edf, TrueRisk, sample, true_risk, truncate
from .risk import RiskSpec, cpt, cpt_truncated, cvar, estimate, rdeu, srm, tau_schedule, ubsr
from .wasserstein import w1_edf, w1_quantile

__all__ = [
    "DistSpec", "Edf", "TrueRisk", "sample", "true_risk", "truncate",
    "RiskSpec", "cpt", "cpt_truncated", "cvar", "estimate", "rdeu", "srm", "tau_schedule", "ubsr",
    "w1_edf", "w1_quantile",
]
