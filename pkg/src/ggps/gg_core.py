"""Generalized Gompertz distribution GG(alpha, beta, gamma).

The cdf is ``t(x)**alpha`` with ``t(x) = 1 - exp(-(beta/gamma) * (exp(gamma x) - 1))``.
Everything here is expressed through ``w = (beta/gamma) * expm1(gamma x)`` so
that the generalized-exponential limit ``gamma -> 0`` (``w = beta x``) is just
a branch, not a cancellation problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

#: Below this ``gamma`` the model is reported and treated as the gamma = 0 case.
GAMMA_ZERO = 1e-8
# expm1(gamma x)/gamma and log1p(gamma w)/gamma stay accurate down to here
_GAMMA_EXACT = 1e-250


@dataclass(frozen=True)
class GgParams:
    """Shape ``alpha``, rate ``beta`` and Gompertz acceleration ``gamma``."""

    alpha: float
    beta: float
    gamma: float = 0.0

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise DomainError(f"beta must be positive, got {self.beta}")
        if not (self.gamma >= 0 and math.isfinite(self.gamma)):
            raise DomainError(f"gamma must be nonnegative, got {self.gamma}")

    def with_alpha(self, alpha: float) -> "GgParams":
        return GgParams(alpha, self.beta, self.gamma)


def scaled_time(x, gamma: float):
    """``expm1(gamma x) / gamma`` (``x`` when gamma is zero)."""
    x = np.asarray(x, dtype=float)
    if gamma < _GAMMA_EXACT:
        return x
    # far-tail overflow to inf is the correct limit (t -> 1)
    with np.errstate(over="ignore"):
        return np.expm1(gamma * x) / gamma


def _taylor_coeffs(offset: int, weight, terms: int = 18) -> np.ndarray:
    c = [weight(j) / math.factorial(j + offset) for j in range(terms)]
    return np.array(c[::-1])


# E1 = x**2 sum_j (j+1) z**j / (j+2)!,  E2 = x**3 sum_j (j+1)(j+2) z**j / (j+3)!
_E1_SERIES = _taylor_coeffs(2, lambda j: j + 1)
_E2_SERIES = _taylor_coeffs(3, lambda j: (j + 1) * (j + 2))


def scaled_time_derivs(x, gamma: float):
    """``E = expm1(gamma x)/gamma`` and its first two derivatives in gamma.

    ``E`` itself is :func:`scaled_time`.  The derivatives use a Taylor series
    where ``gamma x < 0.5``; the closed forms cancel catastrophically there.
    """
    x = np.asarray(x, dtype=float)
    E = scaled_time(x, gamma)
    z = gamma * x
    small = z < 0.5
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        e = np.exp(z)
        E1 = np.where(small, x**2 * np.polyval(_E1_SERIES, z), (e * (z - 1.0) + 1.0) / gamma**2)
        E2 = np.where(small, x**3 * np.polyval(_E2_SERIES, z), (x * x * e - 2.0 * E1) / gamma)
    return E, E1, E2


def log_t_from_w(w):
    """Stable ``log(1 - exp(-w))`` for ``w >= 0``."""
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(w < math.log(2.0), np.log(-np.expm1(-w)), np.log1p(-np.exp(-w)))


def gompertz_w(p: GgParams, x):
    """Cumulative base hazard ``w(x) = (beta/gamma) expm1(gamma x)``."""
    return p.beta * scaled_time(x, p.gamma)


def t_transform(p: GgParams, x):
    """Gompertz base cdf ``t(x) = 1 - exp(-w(x))``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("x must be nonnegative")
    return -np.expm1(-gompertz_w(p, x))


def log_t(p: GgParams, x):
    return log_t_from_w(gompertz_w(p, x))


def gg_cdf(p: GgParams, x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("x must be nonnegative")
    return np.exp(p.alpha * log_t(p, x))


def gg_sf(p: GgParams, x):
    x = np.asarray(x, dtype=float)
    return -np.expm1(p.alpha * log_t(p, x))


def gg_logpdf(p: GgParams, x):
    """Log density; ``+inf`` at ``x = 0`` when ``alpha < 1``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("x must be nonnegative")
    w = gompertz_w(p, x)
    lt = log_t_from_w(w)
    with np.errstate(invalid="ignore"):
        shape = np.where(lt == -np.inf, _boundary_shape_term(p.alpha), (p.alpha - 1.0) * lt)
    return math.log(p.alpha * p.beta) + p.gamma * x - w + shape


def _boundary_shape_term(alpha: float) -> float:
    if alpha < 1:
        return math.inf
    if alpha > 1:
        return -math.inf
    return 0.0


def gg_pdf(p: GgParams, x):
    return np.exp(gg_logpdf(p, x))


def gg_quantile(p: GgParams, q):
    """Inverse of ``gg_cdf``; ``q`` must lie strictly inside (0, 1)."""
    q = np.asarray(q, dtype=float)
    if np.any((q <= 0) | (q >= 1)) or np.any(np.isnan(q)):
        raise DomainError("quantile level must lie in (0, 1)")
    return quantile_from_log_level(p, np.log(q) / p.alpha)


def quantile_from_log_level(p: GgParams, log_t_level):
    """``x`` with ``log t(x) = log_t_level`` (a value in (-inf, 0))."""
    # w = -log(1 - t), computed from log t without forming t near 1
    w = -np.log(-np.expm1(log_t_level))
    if p.gamma < _GAMMA_EXACT:
        return w / p.beta
    return np.log1p(p.gamma * w / p.beta) / p.gamma


def gg_sample(p: GgParams, rng: np.random.Generator, size=None):
    """Inverse-transform draws from GG(alpha, beta, gamma)."""
    u = rng.random(size)
    u = np.where(u == 0.0, np.finfo(float).tiny, u)
    out = gg_quantile(p, u)
    return float(out) if size is None else out
