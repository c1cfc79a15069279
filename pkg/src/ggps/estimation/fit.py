"""Direct maximum-likelihood fitting, result container and interval estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from ..errors import DomainError, SingularInformation
from ..gg_core import GAMMA_ZERO
from .data import Dataset
from .models import COLLAPSE_THETA, THETA_CEIL, ModelSpec, model_spec

#: Converged fits have a (projected) score norm below this times n.
SCORE_TOL_PER_OBS = 1e-5


@dataclass(frozen=True)
class FitConfig:
    method: str = "direct"
    init: tuple[float, ...] | None = None
    max_iter: int = 500
    tol_loglik: float = 1e-8
    tol_param: float = 1e-6
    ci_level: float = 0.95
    multi_start: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("direct", "em", "both"):
            raise DomainError(f"method must be direct, em or both, got {self.method!r}")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")
        if not (self.tol_loglik > 0 and self.tol_param > 0):
            raise DomainError("tolerances must be positive")
        if not 0 < self.ci_level < 1:
            raise DomainError("ci_level must lie in (0, 1)")
        if self.multi_start < 1:
            raise DomainError("multi_start must be >= 1")


@dataclass(frozen=True, eq=False)
class FitResult:
    spec: ModelSpec
    estimates: np.ndarray
    loglik: float
    converged: bool
    method: str
    n: int
    trace: np.ndarray
    score: np.ndarray
    info_matrix: np.ndarray | None
    std_errors: np.ndarray
    ci: np.ndarray
    ci_level: float
    at_bound: tuple[str, ...] = ()
    iterations: int = 0
    method_logliks: dict = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    @property
    def param_names(self) -> tuple[str, ...]:
        return self.spec.param_names

    @property
    def k(self) -> int:
        return self.spec.k

    @property
    def params(self) -> dict[str, float]:
        return dict(zip(self.param_names, map(float, self.estimates)))

    @property
    def model(self):
        return self.spec.build(self.estimates)

    @property
    def collapsed(self) -> bool:
        """Compounded fit whose ``theta`` went to zero: effectively the GG sub-model."""
        return (
            self.spec.has_theta
            and not self.spec.extended
            and self.params["theta"] < COLLAPSE_THETA
        )

    @property
    def gamma_zero(self) -> bool:
        return self.params["gamma"] < 1e3 * GAMMA_ZERO


# -- helpers shared with the EM fitter ------------------------------------------
def _near_bounds(spec: ModelSpec, est: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Mask of parameters sitting on a bound with the score pointing outward."""
    u = spec.to_free(est)
    _, d1, _ = spec.from_free(u)
    gu = grad * d1
    mask = np.zeros(spec.k, dtype=bool)
    for i, (lo, hi) in enumerate(spec.free_bounds()):
        span = 1e-6 * max(1.0, abs(lo), abs(hi))
        if (u[i] - lo < span and gu[i] < 0) or (hi - u[i] < span and gu[i] > 0):
            mask[i] = True
    if spec.has_theta and not spec.extended and est[-1] < COLLAPSE_THETA and grad[-1] < 0:
        mask[-1] = True
    return mask


def _standard_errors(info: np.ndarray, free: np.ndarray):
    k = len(free)
    se = np.full(k, np.nan)
    idx = np.flatnonzero(free)
    if idx.size == 0:
        return se
    sub = info[np.ix_(idx, idx)]
    try:
        np.linalg.cholesky(sub)
        cov = np.linalg.inv(sub)
    except np.linalg.LinAlgError as exc:
        raise SingularInformation("observed information is not positive definite") from exc
    se[idx] = np.sqrt(np.diag(cov))
    return se


def finish_fit(
    spec: ModelSpec,
    est,
    x: np.ndarray,
    *,
    method: str,
    trace,
    ci_level: float,
    iterations: int,
    optimizer_ok: bool,
    notes=(),
) -> FitResult:
    """Evaluate score, information, standard errors and intervals at ``est``."""
    est = np.asarray(est, dtype=float)
    n = x.size
    val, grad, hess = spec.derivs(est, x, 2)
    info = -hess
    bound = _near_bounds(spec, est, grad)
    free_grad = np.where(bound, 0.0, grad)
    converged = bool(optimizer_ok and np.linalg.norm(free_grad) < SCORE_TOL_PER_OBS * n)
    warnings = list(notes)
    try:
        se = _standard_errors(info, ~bound)
    except SingularInformation as exc:
        se = np.full(spec.k, np.nan)
        warnings.append(f"no standard errors: {exc}")
    z = float(stats.norm.ppf(0.5 + ci_level / 2.0))
    ci = np.column_stack([est - z * se, est + z * se])
    at_bound = tuple(name for name, b in zip(spec.param_names, bound) if b)
    if not converged:
        warnings.append("did not converge")
    result = FitResult(
        spec=spec,
        estimates=est,
        loglik=float(val),
        converged=converged,
        method=method,
        n=n,
        trace=np.asarray(trace, dtype=float),
        score=grad,
        info_matrix=info,
        std_errors=se,
        ci=ci,
        ci_level=ci_level,
        at_bound=at_bound,
        iterations=iterations,
        warnings=tuple(warnings),
    )
    if result.collapsed:
        result = _with_warning(result, "theta collapsed to 0: fit reduces to the GG sub-model")
    elif spec.has_theta and spec.theta_kind == "positive" and est[-1] >= 0.999 * THETA_CEIL:
        result = _with_warning(result, "theta diverged: fit sits on its large-theta limit")
    return result


def _with_warning(result: FitResult, text: str) -> FitResult:
    from dataclasses import replace

    return replace(result, warnings=result.warnings + (text,))


def confidence_intervals(fit: FitResult, level: float | None = None) -> np.ndarray:
    """Wald intervals ``estimate +/- z * se`` from the observed information."""
    level = fit.ci_level if level is None else level
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    if fit.info_matrix is None:
        raise SingularInformation("fit carries no information matrix")
    free = np.array([name not in fit.at_bound for name in fit.param_names])
    se = _standard_errors(fit.info_matrix, free)
    z = float(stats.norm.ppf(0.5 + level / 2.0))
    return np.column_stack([fit.estimates - z * se, fit.estimates + z * se])


# -- direct maximization -----------------------------------------------------
def _starts(spec: ModelSpec, x: np.ndarray, config: FitConfig) -> list[np.ndarray]:
    base = spec.default_init(float(x.mean()))
    starts = [spec.to_free(base)]
    if config.init is not None:
        init = np.asarray(config.init, dtype=float)
        if init.size != spec.k:
            raise DomainError(f"init needs {spec.k} values for {spec.label}")
        starts.insert(0, spec.to_free(init))
    rng = np.random.default_rng(config.seed)
    for _ in range(config.multi_start - 1):
        starts.append(spec.to_free(base) + rng.normal(0.0, 1.0, spec.k))
    bounds = np.array(spec.free_bounds())
    return [np.clip(s, bounds[:, 0], bounds[:, 1]) for s in starts]


def _objective(spec: ModelSpec, x: np.ndarray):
    n = x.size

    def f(u):
        p, d1, _ = spec.from_free(u)
        try:
            with np.errstate(all="ignore"):
                val, grad, _ = spec.derivs(p, x, 1)
        except DomainError:
            return 1e300, np.zeros_like(u)
        if not (np.isfinite(val) and np.all(np.isfinite(grad))):
            return 1e300, np.zeros_like(u)
        return -val / n, -(grad * d1) / n

    return f


def newton_polish(spec: ModelSpec, u: np.ndarray, x: np.ndarray, max_steps: int = 50) -> np.ndarray:
    """Damped Newton ascent in free coordinates, keeping parameters on active bounds."""
    bounds = np.array(spec.free_bounds())
    u = np.clip(np.asarray(u, dtype=float), bounds[:, 0], bounds[:, 1])

    def evaluate(v):
        p, d1, d2 = spec.from_free(v)
        with np.errstate(all="ignore"):
            val, g, h = spec.derivs(p, x, 2)
        return val, g, h, p, d1, d2

    val, g, h, p, d1, d2 = evaluate(u)
    for _ in range(max_steps):
        gu = g * d1
        hu = d1[:, None] * h * d1[None, :] + np.diag(g * d2)
        active = _near_bounds(spec, p, g)
        free = np.flatnonzero(~active)
        if free.size == 0 or np.max(np.abs(gu[free])) < 1e-12 * x.size:
            break
        sub = -hu[np.ix_(free, free)]
        try:
            np.linalg.cholesky(sub)
        except np.linalg.LinAlgError:
            break
        step = np.zeros_like(u)
        step[free] = np.linalg.solve(sub, gu[free])
        t = 1.0
        improved = False
        while t > 1e-8:
            cand = np.clip(u + t * step, bounds[:, 0], bounds[:, 1])
            res = evaluate(cand)
            if np.isfinite(res[0]) and res[0] >= val:
                improved = True
                break
            t /= 2.0
        if not improved:
            break
        gain = res[0] - val
        u = cand
        val, g, h, p, d1, d2 = res
        if gain <= 1e-15 * max(1.0, abs(val)) and t < 1:
            break
    return u


def fit_direct(spec: ModelSpec | str, data, config: FitConfig | None = None) -> FitResult:
    """Maximize the log-likelihood by L-BFGS-B from several starts, then Newton-polish."""
    config = config or FitConfig()
    spec = model_spec(spec) if isinstance(spec, str) else spec
    data = data if isinstance(data, Dataset) else Dataset(data)
    data.require_fit_size()
    x = data.values
    f = _objective(spec, x)
    bounds = spec.free_bounds()
    best = None
    total_iter = 0
    for u0 in _starts(spec, x, config):
        trace = []

        def record(u, trace=trace):
            trace.append(-f(u)[0] * x.size)

        res = optimize.minimize(
            f,
            u0,
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            callback=record,
            options={"maxiter": config.max_iter, "ftol": 1e-15, "gtol": 1e-10, "maxcor": 20},
        )
        total_iter += res.nit
        if best is None or res.fun < best[0].fun:
            best = (res, trace)
    res, trace = best
    u = newton_polish(spec, res.x, x)
    p = spec.from_free(u)[0]
    trace = list(trace) + [spec.derivs(p, x, 0)[0]]
    return finish_fit(
        spec,
        p,
        x,
        method="direct",
        trace=trace,
        ci_level=config.ci_level,
        iterations=total_iter,
        optimizer_ok=bool(np.isfinite(res.fun)),
    )


# -- root-existence aids -----------------------------------------------------
def alpha_bracket(family, beta: float, gamma: float, theta: float, data) -> tuple[float, float]:
    """Interval that contains every root of the alpha score equation.

    With ``S = sum(log t_i) < 0`` the score ``n/alpha + sum(L_i (1 + y_i C''(y_i)/C'(y_i)))``
    is positive at ``-n / ((1 + theta C''(theta)/C'(theta)) S)`` and
    non-positive at ``-n / S``.
    """
    from ..gg_core import GgParams, log_t

    x = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    if not theta > 0:
        raise DomainError("alpha bracket needs theta > 0")
    family.check_theta(theta)
    s = float(np.sum(log_t(GgParams(1.0, beta, gamma), x)))
    if not s < 0:
        raise DomainError("sum of log t_i must be negative")
    n = x.size
    lo = -n / ((theta * float(family.dc_ratio(theta)) + 1.0) * s)
    return lo, -n / s


@dataclass(frozen=True)
class RootConditionReport:
    family: str
    condition: str
    lhs: float
    rhs: float
    holds: bool
    second_lhs: float | None
    second_rhs: float | None
    theta_score_at_zero: float
    theta_score_at_edge: float
    theta_root_bracketed: bool
    beta_root_bracketed: bool
    note: str = ""


def check_theta_root_conditions(spec: ModelSpec | str, params, data) -> RootConditionReport:
    """Sufficient conditions for a root of the theta score at fixed (alpha, beta, gamma).

    Geometric, Poisson and logarithmic: ``sum t_i**alpha > n/2``.  Binomial
    (score in ``p = theta/(1+theta)``): additionally
    ``sum t_i**-alpha > n m / (m - 1)``.  The report also evaluates the theta
    score near both ends of its range and the beta score at 1e-6 and 1e6.
    """
    from ..gg_core import GgParams, log_t

    spec = model_spec(spec) if isinstance(spec, str) else spec
    if not spec.has_theta or spec.extended:
        raise DomainError("root conditions apply to the compounded families")
    x = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    n = x.size
    a, b, g, _ = spec.full_params(np.append(np.asarray(params, dtype=float)[:3], 0.5))
    ta = np.exp(a * log_t(GgParams(a, b, g), x))
    lhs, rhs = float(ta.sum()), n / 2.0
    holds = lhs > rhs
    second_lhs = second_rhs = None
    note = ""
    fam = spec.family
    if fam.name == "binomial":
        m = fam.m
        second_lhs = float(np.sum(1.0 / ta))
        second_rhs = n * m / (m - 1) if m > 1 else math.inf
        holds = holds and second_lhs > second_rhs
        note = "binomial second condition uses nm/(m-1); the 1-m variant can never bind"

    def theta_score(th):
        return spec.derivs([a, b, g, th], x, 1)[1][3]

    lo, hi = fam.theta_range()
    edge = 1.0 - 1e-9 if hi == 1.0 else 1e6
    s0, s1 = theta_score(1e-9), theta_score(edge)

    def beta_score(beta):
        return spec.derivs([a, beta, g, 0.5 if hi == 1.0 else 1.0], x, 1)[1][1]

    return RootConditionReport(
        family=fam.name,
        condition="sum t^a > n/2" + (" and sum t^-a > nm/(m-1)" if fam.name == "binomial" else ""),
        lhs=lhs,
        rhs=rhs,
        holds=holds,
        second_lhs=second_lhs,
        second_rhs=second_rhs,
        theta_score_at_zero=float(s0),
        theta_score_at_edge=float(s1),
        theta_root_bracketed=bool(s0 > 0 > s1),
        beta_root_bracketed=bool(beta_score(1e-6) > 0 > beta_score(1e6)),
        note=note,
    )


def fit(spec: ModelSpec | str, data, config: FitConfig | None = None) -> FitResult:
    """Fit by ``config.method``; ``both`` runs direct and EM and keeps the higher likelihood.

    Models without a latent count (Gompertz, GG, extended geometric) are always
    fitted directly.
    """
    from dataclasses import replace

    from .em import fit_em

    config = config or FitConfig()
    spec = model_spec(spec) if isinstance(spec, str) else spec
    em_ok = spec.has_theta and not spec.extended
    if config.method == "direct" or not em_ok:
        result = fit_direct(spec, data, config)
        return replace(result, method_logliks={"direct": result.loglik})
    if config.method == "em":
        result = fit_em(spec, data, config)
        return replace(result, method_logliks={"em": result.loglik})
    direct = fit_direct(spec, data, config)
    em = fit_em(spec, data, config)
    logliks = {"direct": direct.loglik, "em": em.loglik}
    if em.loglik > direct.loglik or (em.loglik == direct.loglik and tuple(em.estimates) < tuple(direct.estimates)):
        best = em
    else:
        best = direct
    return replace(best, method_logliks=logliks)
