"""Series representations of GGPS moments and Laplace transforms.

Both expand ``t**(n alpha - 1)`` binomially in ``exp(-w)`` and reduce each
term to an integral over ``v = exp(gamma x)`` on ``[1, inf)``::

    int_1^inf v**(s-1) exp(-z v) dv = z**-s Gamma(s) - sum_k (-z)**k / (k! (s + k))

The alternating ``k``-sum alone is what the termwise (divergent) exchange of
sum and integral produces; the ``z**-s Gamma(s)`` term has to be kept or the
result is wrong (already for ``r = 0`` the sum does not integrate to one).

These routes are oracles for the quadrature methods in ``ggps_dist``.
They cancel catastrophically when ``z = (beta/gamma)(j + 1)`` is large, so
every evaluation carries a rounding-error estimate and raises
:class:`SeriesDivergence` when that estimate is too big.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import binom, gamma as gamma_fn, polygamma

from .errors import SeriesDivergence
from .gg_core import GAMMA_ZERO

REL_TOL = 1e-14
N_MAX = 500
J_MAX = 1000
K_MAX = 1000
EPS = np.finfo(float).eps
#: Largest acceptable estimated relative rounding error.
MAX_REL_ERROR = 1e-7


def _check_z(z: float) -> None:
    if z > 700.0:
        raise SeriesDivergence(f"z={z:.4g} overflows the k-series scale exp(z)")


def _gamma_term_derivs(z: float, r: int) -> float:
    """``d^r/ds^r [z**-s Gamma(s)]`` at ``s = 1``."""
    # h = exp(g), g(s) = log Gamma(s) - s log z
    g = [0.0] * (r + 1)  # g[k] = k-th derivative of g at 1 (k >= 1)
    if r >= 1:
        g[1] = float(polygamma(0, 1.0)) - math.log(z)
    for k in range(2, r + 1):
        g[k] = float(polygamma(k - 1, 1.0))
    h = [1.0 / z]
    for m in range(1, r + 1):
        h.append(sum(math.comb(m - 1, k) * g[k + 1] * h[m - 1 - k] for k in range(m)))
    return h[r]


def _log_integral_moment(z: float, r: int):
    """``int_1^inf (log v)**r exp(-z (v - 1)) dv`` and an absolute error bound."""
    _check_z(z)
    d = _gamma_term_derivs(z, r)
    fact = math.factorial(r)
    total = d
    mag = abs(d)
    term = 1.0  # z^k / k!
    sign_r = -1.0 if (r + 1) % 2 else 1.0
    streak = 0
    for k in range(K_MAX):
        if k:
            term *= z / k
        piece = (-1.0) ** k * sign_r * fact * term / (k + 1) ** (r + 1)
        total += piece
        mag += abs(piece)
        if k > z and abs(piece) < REL_TOL * abs(total):
            streak += 1
            if streak >= 3:
                break
        else:
            streak = 0
    else:
        raise SeriesDivergence(f"k-series did not settle for z={z:.4g}")
    scale = math.exp(z)
    return scale * total, scale * mag * EPS * 8


def _upper_gamma_series(sigma: float, z: float):
    """``exp(z) int_1^inf v**(sigma-1) exp(-z v) dv`` and an error bound."""
    _check_z(z)
    nearest = round(sigma)
    if nearest <= 0 and abs(sigma - nearest) < 1e-6:
        raise SeriesDivergence("series pole: 1 - s/gamma is a nonpositive integer")
    lead = z ** (-sigma) * float(gamma_fn(sigma))
    total = lead
    mag = abs(lead)
    term = 1.0
    streak = 0
    for k in range(K_MAX):
        if k:
            term *= z / k
        piece = -((-1.0) ** k) * term / (sigma + k)
        total += piece
        mag += abs(piece)
        if k > z and abs(piece) < REL_TOL * abs(total):
            streak += 1
            if streak >= 3:
                break
        else:
            streak = 0
    else:
        raise SeriesDivergence(f"k-series did not settle for z={z:.4g}")
    scale = math.exp(z)
    return scale * total, scale * mag * EPS * 8


def _binomial_j_sum(a: float, inner):
    """``sum_j binom(a, j) (-1)**j inner(j)`` with decay-based truncation."""
    total = 0.0
    err = 0.0
    if a == int(a) and a >= 0:
        js = range(int(a) + 1)
    else:
        js = range(J_MAX + 1)
    streak = 0
    for j in js:
        c = float(binom(a, j)) * (-1.0) ** j
        val, e = inner(j)
        piece = c * val
        total += piece
        with np.errstate(over="ignore"):
            err += abs(c) * e + abs(piece) * EPS
        if abs(piece) < REL_TOL * abs(total):
            streak += 1
            if streak >= 3 and not (a == int(a) and a >= 0):
                break
        else:
            streak = 0
    else:
        if not (a == int(a) and a >= 0):
            raise SeriesDivergence(f"binomial j-series in a={a:.4g} did not decay by j={J_MAX}")
    return total, err


def _check_model(model):
    if model.gg.gamma < GAMMA_ZERO:
        raise SeriesDivergence("series forms divide by gamma; use quadrature at gamma = 0")
    if not model.has_latent_law:
        raise SeriesDivergence("no power-series pmf for theta outside the family range")


def moment_series(model, r: int) -> float:
    """Raw moment ``E X**r`` from the mixture-of-GG triple series."""
    _check_model(model)
    a, b, g = model.gg.alpha, model.gg.beta, model.gg.gamma
    ns, ps = model.family.pmf_table(model.theta)
    if len(ns) > N_MAX:
        raise SeriesDivergence(f"latent-count support exceeds n_max={N_MAX}")
    total = 0.0
    err = 0.0
    for n, p in zip(ns, ps):
        na = n * a

        def inner(j, _r=r):
            return _log_integral_moment(b / g * (j + 1), _r)

        s, e = _binomial_j_sum(na - 1.0, inner)
        scale = na * b / g ** (r + 1)
        total += p * scale * s
        err += p * scale * e
    if not (math.isfinite(total) and err <= MAX_REL_ERROR * abs(total)):
        raise SeriesDivergence(f"series too ill-conditioned (value {total:.3e}, error bound {err:.1e})")
    return total


def laplace_series(model, s: float) -> float:
    """Laplace transform ``E exp(-s X)`` from the mixture series."""
    _check_model(model)
    a, b, g = model.gg.alpha, model.gg.beta, model.gg.gamma
    sigma = 1.0 - s / g
    ns, ps = model.family.pmf_table(model.theta)
    if len(ns) > N_MAX:
        raise SeriesDivergence(f"latent-count support exceeds n_max={N_MAX}")
    total = 0.0
    err = 0.0
    for n, p in zip(ns, ps):
        na = n * a

        def inner(j):
            return _upper_gamma_series(sigma, b / g * (j + 1))

        val, e = _binomial_j_sum(na - 1.0, inner)
        scale = na * b / g
        total += p * scale * val
        err += p * scale * e
    if not (math.isfinite(total) and err <= MAX_REL_ERROR * abs(total)):
        raise SeriesDivergence(f"series too ill-conditioned (value {total:.3e}, error bound {err:.1e})")
    return total

