"""EM fitting with the latent cause count ``Z`` as missing data.

Given ``Z_i = z_i`` the lifetime is the maximum of ``z_i`` GG draws, so the
expected complete-data log-likelihood is, up to a constant::

    Q = n zbar log(theta) - n log C(theta) + n log(alpha beta)
        + gamma sum(x) - sum(w) + sum((z_i alpha - 1) L_i)

The M-step maximizes ``Q`` one block at a time (alpha in closed form, then
beta, gamma and theta by one-dimensional solves), each at the latest values of
the others.  A conditional update is kept only if it does not lower ``Q``,
which is what makes the observed-data log-likelihood monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ..errors import DomainError, RootNotBracketed
from ..gg_core import log_t_from_w, scaled_time, scaled_time_derivs
from .data import Dataset
from .fit import SCORE_TOL_PER_OBS, FitConfig, FitResult, _near_bounds, finish_fit
from .models import ALPHA_BOUNDS, BETA_BOUNDS, GAMMA_BOUNDS, THETA_CEIL, THETA_FLOOR, ModelSpec, model_spec

#: Largest dynamic range explored when bracketing a root (factor 1e12 each way).
BRACKET_LOG_SPAN = 12 * math.log(10.0)
ASCENT_SLACK = 1e-10
SQUAREM_BACKTRACKS = 6
#: Below this theta an accelerated fit also tries jumping to the theta floor.
BOUNDARY_PROBE = 1e-2


@dataclass(frozen=True)
class EmState:
    current: np.ndarray
    z_hat: np.ndarray
    iteration: int = 0

    def __post_init__(self):
        if np.any(self.z_hat < 1.0 - 1e-12):
            raise DomainError("posterior counts must be >= 1")


def em_estep(params, spec: ModelSpec, x) -> np.ndarray:
    """Posterior means ``E[Z | X = x_i] = 1 + y C''(y)/C'(y)`` with ``y = theta t**alpha``."""
    a, b, g, th = spec.full_params(params)
    E = scaled_time(np.asarray(x, dtype=float), g)
    y = th * np.exp(a * log_t_from_w(b * E))
    return 1.0 + y * spec.family.dc_ratio(y)


def _q_gg(a, b, g, z, x, sum_x):
    E = scaled_time(x, g)
    w = b * E
    L = log_t_from_w(w)
    return x.size * math.log(a * b) + g * sum_x - w.sum() + np.sum((z * a - 1.0) * L)


def _q_theta(family, th, zbar):
    kappa = float(family.log_theta_over_c(th)[0])
    return kappa + (zbar - 1.0) * math.log(th)


def bracket_root(f, u0: float, lo: float, hi: float):
    """Expand geometrically around ``u0`` (in log space) until ``f`` changes sign."""
    f0 = f(u0)
    if f0 == 0:
        return u0, u0
    step = 0.5
    left, right = u0, u0
    while step <= BRACKET_LOG_SPAN:
        new_left, new_right = max(u0 - step, lo), min(u0 + step, hi)
        if new_left < left:
            if np.sign(f(new_left)) != np.sign(f0):
                return new_left, left
            left = new_left
        if new_right > right:
            if np.sign(f(new_right)) != np.sign(f0):
                return right, new_right
            right = new_right
        if left <= lo and right >= hi:
            break
        step *= 2.0
    raise RootNotBracketed(f"no sign change within [{math.exp(left):.3g}, {math.exp(right):.3g}]")


def _conditional_update(q_of_log, dq_of_log, u0: float, lo: float, hi: float) -> float:
    """Maximize a one-dimensional ``Q`` in a log coordinate, never decreasing it."""
    q0 = q_of_log(u0)
    best_u, best_q = u0, q0
    try:
        a, b = bracket_root(dq_of_log, u0, lo, hi)
        u = u0 if a == b else optimize.brentq(dq_of_log, a, b, xtol=1e-14, rtol=1e-14, maxiter=200)
        qu = q_of_log(u)
        if qu >= best_q:
            best_u, best_q = u, qu
    except RootNotBracketed:
        pass
    if best_u == u0 or not np.isfinite(best_q):
        # no usable stationary point: search the bounded window directly
        res = optimize.minimize_scalar(
            lambda v: -q_of_log(v),
            bounds=(max(lo, u0 - 5.0), min(hi, u0 + 5.0)),
            method="bounded",
            options={"xatol": 1e-12},
        )
        if np.isfinite(res.fun) and -res.fun > best_q:
            best_u, best_q = float(res.x), -float(res.fun)
        # a monotone Q is maximized on the box edge, which the bounded search
        # only approaches to within its tolerance
        slope = dq_of_log(best_u)
        edge = lo if slope < 0 else hi if slope > 0 else None
        if edge is not None:
            q_edge = q_of_log(edge)
            if np.isfinite(q_edge) and q_edge >= best_q:
                best_u = edge
    return best_u


def em_mstep(state: EmState, spec: ModelSpec, x) -> np.ndarray:
    """One conditional-maximization cycle; returns the new parameter vector."""
    x = np.asarray(x, dtype=float)
    n = x.size
    z = state.z_hat
    a, b, g, th = spec.full_params(state.current)
    sum_x = float(x.sum())

    # alpha: n / alpha + sum(z L) = 0
    L = log_t_from_w(b * scaled_time(x, g))
    if spec.has_alpha:
        a_new = -n / float(np.sum(z * L))
        a_new = min(max(a_new, ALPHA_BOUNDS[0]), ALPHA_BOUNDS[1])
        if _q_gg(a_new, b, g, z, x, sum_x) >= _q_gg(a, b, g, z, x, sum_x):
            a = a_new

    # beta: beta * dQ/dbeta = n - w + (z a - 1) q w summed
    E = scaled_time(x, g)

    def dq_beta(u):
        w = math.exp(u) * E
        with np.errstate(over="ignore"):
            qw = w / np.expm1(w)
        return n - w.sum() + np.sum((z * a - 1.0) * qw)

    b = math.exp(_conditional_update(
        lambda u: _q_gg(a, math.exp(u), g, z, x, sum_x), dq_beta, math.log(b),
        math.log(BETA_BOUNDS[0]), math.log(BETA_BOUNDS[1]),
    ))

    # gamma: gamma * dQ/dgamma = gamma (sum x - sum w_g + sum (z a - 1) q w_g)
    def dq_gamma(u):
        gg = math.exp(u)
        E0, E1, _ = scaled_time_derivs(x, gg)
        w = b * E0
        with np.errstate(over="ignore", divide="ignore"):
            q = 1.0 / np.expm1(w)
        wg = b * E1
        with np.errstate(invalid="ignore"):
            val = gg * (sum_x - wg.sum() + np.sum((z * a - 1.0) * q * wg))
        # only overflow at huge gamma produces nan, where Q is falling steeply
        return val if np.isfinite(val) else -math.inf

    g = math.exp(_conditional_update(
        lambda u: _q_gg(a, b, math.exp(u), z, x, sum_x), dq_gamma, math.log(g),
        math.log(GAMMA_BOUNDS[0]), math.log(GAMMA_BOUNDS[1]),
    ))

    # theta: theta C'(theta) / C(theta) = zbar
    th = _theta_update(spec.family, th, float(z.mean()))
    out = [a, b, g, th] if spec.has_alpha else [b, g, th]
    return np.array(out)


def _theta_update(family, th: float, zbar: float) -> float:
    lo, hi = family.theta_range()
    upper = min(hi, THETA_CEIL)
    if family.name == "geometric":
        new = 1.0 - 1.0 / zbar
        new = min(max(new, THETA_FLOOR), 1.0 - THETA_FLOOR)
    else:
        lo_u, hi_u = math.log(THETA_FLOOR), math.log(upper * (1 - 1e-12) if hi == 1.0 else upper)

        def ratio_minus(u):
            t = math.exp(u)
            return 1.0 - t * float(family.log_theta_over_c(t)[1]) - zbar

        if ratio_minus(lo_u) >= 0:
            new = THETA_FLOOR
        elif ratio_minus(hi_u) <= 0:
            new = math.exp(hi_u)
        else:
            new = math.exp(optimize.brentq(ratio_minus, lo_u, hi_u, xtol=1e-14, rtol=1e-14, maxiter=200))
    if _q_theta(family, new, zbar) >= _q_theta(family, th, zbar):
        return new
    return th


def _stationary(spec: ModelSpec, est, x) -> bool:
    grad = spec.derivs(est, x, 1)[1]
    free = ~_near_bounds(spec, est, grad)
    return bool(np.linalg.norm(grad[free]) < SCORE_TOL_PER_OBS * x.size)


def _em_map(spec: ModelSpec, x: np.ndarray, it: int):
    def step(est):
        return em_mstep(EmState(est, em_estep(est, spec, x), it), spec, x)

    return step


def _squarem_cycle(spec: ModelSpec, x, step, est, ll):
    """One squared-extrapolation cycle; never worse than two plain EM steps."""
    p1 = step(est)
    p2 = step(p1)
    ll2 = spec.derivs(p2, x, 0)[0]
    # natural coordinates: a geometric approach to a bound (theta -> 0) is
    # then extrapolated exactly, where log coordinates would only crawl
    r = p1 - est
    v = p2 - 2.0 * p1 + est
    nv = float(np.linalg.norm(v))
    if nv == 0.0 or not np.isfinite(ll2):
        return p2, ll2
    alpha = min(-float(np.linalg.norm(r)) / nv, -1.0)
    if alpha == -1.0:
        return p2, ll2
    lo, hi = spec.natural_bounds()
    # backtrack the step length towards -1 (the plain double step)
    for _ in range(SQUAREM_BACKTRACKS):
        p_ext = np.clip(est - 2.0 * alpha * r + alpha * alpha * v, lo, hi)
        try:
            with np.errstate(all="ignore"):
                p3 = step(p_ext)
                ll3 = spec.derivs(p3, x, 0)[0]
        except (DomainError, ValueError, ArithmeticError):
            ll3 = -math.inf
        if np.isfinite(ll3) and ll3 >= ll2:
            return p3, ll3
        alpha = (alpha - 1.0) / 2.0
        if alpha > -1.5:
            break
    return p2, ll2


def _boundary_probe(spec: ModelSpec, x, step, est, ll):
    """Try ``theta`` on its floor when EM is creeping towards it.

    Near ``theta = 0`` the EM map contracts ``theta`` by a factor close to 1
    per step, so the boundary maximum is otherwise reached only slowly.
    """
    if est[-1] >= BOUNDARY_PROBE or spec.derivs(est, x, 1)[1][-1] >= 0:
        return est, ll
    trial = est.copy()
    trial[-1] = THETA_FLOOR
    try:
        with np.errstate(all="ignore"):
            p = step(trial)
            lp = spec.derivs(p, x, 0)[0]
    except (DomainError, ValueError, ArithmeticError):
        return est, ll
    if np.isfinite(lp) and lp > ll:
        return p, lp
    return est, ll


def fit_em(spec: ModelSpec | str, data, config: FitConfig | None = None, accelerate: bool = True) -> FitResult:
    """Iterate E- and M-steps until the log-likelihood gain drops below ``tol_loglik``.

    With ``accelerate`` each iteration is a SQUAREM cycle (two EM steps, a
    squared extrapolation and one stabilizing EM step), falling back to the
    plain double step whenever the extrapolated point is not better, plus
    a probe of the ``theta`` floor once ``theta`` is small and falling.
    """
    config = config or FitConfig(method="em")
    spec = model_spec(spec) if isinstance(spec, str) else spec
    if not spec.has_theta or spec.extended:
        raise DomainError(f"EM needs a latent count; {spec.label} has none")
    data = data if isinstance(data, Dataset) else Dataset(data)
    data.require_fit_size()
    x = data.values
    est = np.asarray(config.init if config.init is not None else spec.default_init(data.mean), dtype=float)
    if est.size != spec.k:
        raise DomainError(f"init needs {spec.k} values for {spec.label}")
    ll = spec.derivs(est, x, 0)[0]
    trace = [ll]
    notes = []
    done = False
    it = 0
    for it in range(1, config.max_iter + 1):
        step = _em_map(spec, x, it)
        if accelerate:
            new, new_ll = _squarem_cycle(spec, x, step, est, ll)
            new, new_ll = _boundary_probe(spec, x, step, new, new_ll)
        else:
            new = step(est)
            new_ll = spec.derivs(new, x, 0)[0]
        if new_ll < ll - ASCENT_SLACK * max(1.0, abs(ll)):
            notes.append(f"log-likelihood fell by {ll - new_ll:.3g} at iteration {it}")
        change = np.max(np.abs(new - est) / np.maximum(np.abs(est), 1.0))
        gain = new_ll - ll
        est, ll = new, new_ll
        trace.append(ll)
        if abs(gain) < config.tol_loglik and change < config.tol_param and _stationary(spec, est, x):
            done = True
            break
    return finish_fit(
        spec,
        est,
        x,
        method="em",
        trace=trace,
        ci_level=config.ci_level,
        iterations=it,
        optimizer_ok=done,
        notes=notes,
    )
