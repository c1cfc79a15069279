"""Observed-data log-likelihood with analytic score and Hessian.

Per observation, with ``w = beta E(gamma)``, ``E = expm1(gamma x)/gamma``,
``L = log t = log(1 - exp(-w))`` and ``y = theta exp(alpha L)``::

    l = kappa(theta) + log(alpha beta) + gamma x - w + (alpha - 1) L + psi(y)

where ``kappa = log theta - log C(theta)`` and ``psi = log C'``.  All
derivatives are chained through ``w`` and ``y``; ``psi' = C''/C'`` and
``psi'' = C'''/C' - (C''/C')**2``.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DomainError
from ..gg_core import log_t_from_w, scaled_time_derivs
from ..ggps_dist import GgModel, GgpsModel
from .data import as_values


def _gompertz_pieces(beta: float, gamma: float, x: np.ndarray):
    """``w``, ``L`` and the derivatives of ``L`` in (beta, gamma)."""
    E, E1, E2 = scaled_time_derivs(x, gamma)
    w = beta * E
    L = log_t_from_w(w)
    with np.errstate(over="ignore", divide="ignore"):
        q = 1.0 / np.expm1(w)
    Lww = -q * (1.0 + q)
    wg = beta * E1
    return {
        "E": E,
        "E1": E1,
        "w": w,
        "L": L,
        "Lb": q * E,
        "Lg": q * wg,
        "Lbb": Lww * E * E,
        "Lbg": Lww * E * wg + q * E1,
        "Lgg": Lww * wg * wg + q * beta * E2,
        "E2": E2,
    }


def gg_derivs(alpha: float, beta: float, gamma: float, x, order: int = 2):
    """Log-likelihood of GG(alpha, beta, gamma), gradient and Hessian (alpha, beta, gamma)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    p = _gompertz_pieces(beta, gamma, x)
    a, b = alpha, beta
    L = p["L"]
    val = n * math.log(a * b) + gamma * x.sum() - p["w"].sum() + (a - 1.0) * L.sum()
    if order == 0:
        return float(val), None, None
    grad = np.array([
        n / a + L.sum(),
        n / b - p["E"].sum() + (a - 1.0) * p["Lb"].sum(),
        x.sum() - b * p["E1"].sum() + (a - 1.0) * p["Lg"].sum(),
    ])
    if order == 1:
        return float(val), grad, None
    h = np.empty((3, 3))
    h[0, 0] = -n / a**2
    h[0, 1] = h[1, 0] = p["Lb"].sum()
    h[0, 2] = h[2, 0] = p["Lg"].sum()
    h[1, 1] = -n / b**2 + (a - 1.0) * p["Lbb"].sum()
    h[1, 2] = h[2, 1] = -p["E1"].sum() + (a - 1.0) * p["Lbg"].sum()
    h[2, 2] = -b * p["E2"].sum() + (a - 1.0) * p["Lgg"].sum()
    return float(val), grad, h


def ggps_derivs(family, alpha: float, beta: float, gamma: float, theta: float, x, order: int = 2):
    """Log-likelihood, gradient and Hessian in (alpha, beta, gamma, theta)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    a, b, th = alpha, beta, theta
    val3, g3, h3 = gg_derivs(a, b, gamma, x, order)
    p = _gompertz_pieces(b, gamma, x)
    L, Lb, Lg = p["L"], p["Lb"], p["Lg"]
    y = th * np.exp(a * L)
    kappa, dk, d2k = family.log_theta_over_c(th)
    val = val3 + n * float(kappa) + float(np.sum(family.log_dc(y)))
    if order == 0:
        return val, None, None
    r1 = family.dc_ratio(y)
    # first derivatives of y, divided by y
    ya, yb, yg = L, a * Lb, a * Lg
    yr = y * r1
    grad = np.array([
        g3[0] + np.sum(yr * ya),
        g3[1] + np.sum(yr * yb),
        g3[2] + np.sum(yr * yg),
        n * float(dk) + np.sum(yr) / th,
    ])
    if order == 1:
        return val, grad, None
    r2 = family.dc_ratio2(y)
    psi2y2 = (r2 - r1 * r1) * y * y
    firsts = [ya, yb, yg, np.full_like(y, 1.0 / th)]
    # second derivatives of y, divided by y
    seconds = {
        (0, 0): L * L,
        (0, 1): Lb * (1.0 + a * L),
        (0, 2): Lg * (1.0 + a * L),
        (0, 3): L / th,
        (1, 1): a * a * Lb * Lb + a * p["Lbb"],
        (1, 2): a * a * Lb * Lg + a * p["Lbg"],
        (1, 3): a * Lb / th,
        (2, 2): a * a * Lg * Lg + a * p["Lgg"],
        (2, 3): a * Lg / th,
        (3, 3): np.zeros_like(y),
    }
    h = np.zeros((4, 4))
    h[:3, :3] = h3
    h[3, 3] = n * float(d2k)
    for (i, j), s in seconds.items():
        v = np.sum(psi2y2 * firsts[i] * firsts[j] + yr * s)
        h[i, j] += v
        if i != j:
            h[j, i] += v
    return val, grad, h


def _derivs(model, x, order):
    if isinstance(model, GgModel):
        return gg_derivs(model.alpha, model.beta, model.gamma, x, order)
    if isinstance(model, GgpsModel):
        return ggps_derivs(model.family, model.alpha, model.beta, model.gamma, model.theta, x, order)
    raise TypeError(f"unsupported model type {type(model).__name__}")


def _require_interior(model):
    if not model.gamma > 0:
        raise DomainError("derivatives need gamma > 0 (interior point)")


def loglik(model, data) -> float:
    """Observed-data log-likelihood; ``-inf`` if it cannot be evaluated."""
    x = as_values(data)
    with np.errstate(all="ignore"):
        val = _derivs(model, x, 0)[0]
    return float(val) if np.isfinite(val) else -math.inf


def score(model, data) -> np.ndarray:
    """Gradient of :func:`loglik` in the model's natural parameters."""
    _require_interior(model)
    return _derivs(model, as_values(data), 1)[1]


def observed_info(model, data) -> np.ndarray:
    """Negative Hessian of :func:`loglik` in the model's natural parameters."""
    _require_interior(model)
    h = _derivs(model, as_values(data), 2)[2]
    return -h
