"""Goodness-of-fit and model-selection statistics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DomainError

#: Significance level used to annotate K-S p-values in reports.
SIGNIFICANCE = 0.10
_CLAMP = 1e-12


def _sorted_levels(data, cdf) -> np.ndarray:
    x = np.sort(np.asarray(getattr(data, "values", data), dtype=float))
    if x.size < 5:
        raise DomainError("goodness-of-fit statistics need at least 5 observations")
    return np.asarray(cdf(x), dtype=float)


def ks_test(data, cdf) -> tuple[float, float]:
    """One-sample Kolmogorov-Smirnov distance and its asymptotic p-value.

    The p-value is ``P(K > sqrt(n) D)`` for the Kolmogorov limit law, with no
    allowance for parameters estimated from the same data.
    """
    u = _sorted_levels(data, cdf)
    n = u.size
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - u), np.max(u - (i - 1) / n)))
    return d, float(stats.kstwobign.sf(math.sqrt(n) * d))


def cm_ad(data, cdf) -> tuple[float, float]:
    """Classical Cramer-von Mises ``W^2`` and Anderson-Darling ``A^2``.

    No small-sample modification factors are applied.  Levels that are
    exactly 0 or 1 are clamped to ``1e-12`` away with a warning.
    """
    u = _sorted_levels(data, cdf)
    if np.any((u <= 0) | (u >= 1)):
        warnings.warn("fitted cdf hit 0 or 1 at a data point; clamping", RuntimeWarning, stacklevel=2)
        u = np.clip(u, _CLAMP, 1.0 - _CLAMP)
    n = u.size
    i = np.arange(1, n + 1)
    w2 = float(np.sum((u - (2 * i - 1) / (2 * n)) ** 2) + 1.0 / (12 * n))
    a2 = float(-n - np.sum((2 * i - 1) * (np.log(u) + np.log1p(-u[::-1]))) / n)
    return w2, a2


def info_criteria(loglik: float, k_params: int, n: int) -> tuple[float, float, float]:
    """``(AIC, AICC, BIC)`` for a maximized log-likelihood."""
    if n - k_params - 1 <= 0:
        raise DomainError("AICC needs n > k + 1")
    aic = 2.0 * k_params - 2.0 * loglik
    aicc = aic + 2.0 * k_params * (k_params + 1) / (n - k_params - 1)
    bic = k_params * math.log(n) - 2.0 * loglik
    return aic, aicc, bic


@dataclass(frozen=True)
class GofReport:
    ks_stat: float
    ks_pvalue: float
    cm_stat: float
    ad_stat: float
    aic: float
    aicc: float
    bic: float
    n: int
    k_params: int
    params_estimated: bool = True

    @property
    def rejected(self) -> bool:
        """K-S rejects the model at the report's significance level."""
        return self.ks_pvalue < SIGNIFICANCE


def gof_report(data, cdf, loglik: float, k_params: int) -> GofReport:
    n = int(np.asarray(getattr(data, "values", data)).size)
    d, p = ks_test(data, cdf)
    w2, a2 = cm_ad(data, cdf)
    aic, aicc, bic = info_criteria(loglik, k_params, n)
    return GofReport(d, p, w2, a2, aic, aicc, bic, n, k_params)


def fit_gof(fit_result, data) -> GofReport:
    """GoF statistics for a :class:`~ggps.estimation.FitResult` on its data."""
    return gof_report(data, fit_result.model.cdf, fit_result.loglik, fit_result.k)
