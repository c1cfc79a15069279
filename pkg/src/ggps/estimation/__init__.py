from .data import Dataset
from .fit import (
    FitConfig,
    FitResult,
    RootConditionReport,
    alpha_bracket,
    check_theta_root_conditions,
    confidence_intervals,
    fit,
    fit_direct,
)
from .em import EmState, em_estep, em_mstep, fit_em
from .likelihood import loglik, observed_info, score
from .models import COLLAPSE_THETA, ModelSpec, model_spec
from .profile import ProfilePoint, profile_loglik

__all__ = [
    "COLLAPSE_THETA",
    "Dataset",
    "FitConfig",
    "FitResult",
    "ModelSpec",
    "ProfilePoint",
    "RootConditionReport",
    "alpha_bracket",
    "check_theta_root_conditions",
    "confidence_intervals",
    "EmState",
    "em_estep",
    "em_mstep",
    "fit",
    "fit_em",
    "fit_direct",
    "loglik",
    "model_spec",
    "observed_info",
    "profile_loglik",
    "score",
]
