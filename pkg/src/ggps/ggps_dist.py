"""The compounded GGPS(alpha, beta, gamma, theta) lifetime distribution.

``X = max(Y_1, ..., Y_N)`` with ``Y_i ~ GG(alpha, beta, gamma)`` i.i.d. and
``N`` drawn from a zero-truncated power-series law, so that
``F(x) = C(theta t(x)**alpha) / C(theta)``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from . import gg_core
from .errors import DomainError, SeriesDivergence
from .gg_core import GAMMA_ZERO, GgParams
from .power_series import Geometric, PowerSeriesFamily

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-8
#: Upper integration limit, as a probability level.
UPPER_LEVEL = 1.0 - 1e-12
_BREAK_LEVELS = (1e-6, 0.01, 0.25, 0.5, 0.75, 0.99, 1.0 - 1e-6)


class HazardShape(enum.Enum):
    INCREASING = "increasing"
    DECREASING_BATHTUB = "decreasing-bathtub"


@dataclass(frozen=True)
class HazardShapeCheck:
    """Numerical picture of the hazard on a log-spaced grid."""

    grid: np.ndarray = field(repr=False)
    hazard: np.ndarray = field(repr=False)
    sign_changes: int
    turning_points: tuple[float, ...]
    increasing: bool
    starts_decreasing: bool


@dataclass(frozen=True)
class GgpsModel:
    """A four-parameter GGPS model bound to a power-series family."""

    family: PowerSeriesFamily
    gg: GgParams
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta))
        self._check_theta()

    def _check_theta(self):
        self.family.check_theta(self.theta)

    @classmethod
    def from_params(cls, family: PowerSeriesFamily, alpha, beta, gamma, theta) -> "GgpsModel":
        return cls(family, GgParams(alpha, beta, gamma), theta)

    @property
    def alpha(self) -> float:
        return self.gg.alpha

    @property
    def beta(self) -> float:
        return self.gg.beta

    @property
    def gamma(self) -> float:
        return self.gg.gamma

    @property
    def params(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma, self.theta])

    @property
    def has_latent_law(self) -> bool:
        """True when ``theta`` indexes a genuine latent-count pmf."""
        lo, hi = self.family.theta_range()
        return lo < self.theta < hi

    # -- evaluation --------------------------------------------------------
    def _log_t(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainError("x must be nonnegative")
        return gg_core.log_t(self.gg, x)

    def cdf(self, x):
        u = np.exp(self.alpha * self._log_t(x))
        return self.family.cdf_ratio(self.theta, u)

    def sf(self, x):
        v = -np.expm1(self.alpha * self._log_t(x))
        return self.family.sf_ratio(self.theta, v)

    survival = sf

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        lt = self._log_t(x)
        w = gg_core.gompertz_w(self.gg, x)
        y = self.theta * np.exp(self.alpha * lt)
        kappa = self.family.log_theta_over_c(self.theta)[0]
        with np.errstate(invalid="ignore"):
            shape = np.where(
                lt == -np.inf, gg_core._boundary_shape_term(self.alpha), (self.alpha - 1.0) * lt
            )
        return (
            kappa
            + math.log(self.alpha * self.beta)
            + self.gamma * x
            - w
            + shape
            + self.family.log_dc(y)
        )

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def hazard(self, x):
        s = self.sf(x)
        if np.any(s <= 0):
            raise DomainError("hazard undefined where the survival function underflows")
        return self.pdf(x) / s

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        if np.any((q <= 0) | (q >= 1)) or np.any(np.isnan(q)):
            raise DomainError("quantile level must lie in (0, 1)")
        level = self.family.quantile_ratio(self.theta, q)
        x = gg_core.quantile_from_log_level(self.gg, np.log(level) / self.alpha)
        x = np.atleast_1d(np.asarray(x, dtype=float)).copy()
        qs = np.atleast_1d(q)
        bad = ~np.isfinite(x) | (np.abs(self.cdf(np.where(np.isfinite(x), x, 0.0)) - qs) >= 1e-10)
        for i in np.flatnonzero(bad):
            x[i] = self._quantile_bisect(float(qs[i]))
        return x.reshape(q.shape) if q.ndim else float(x[0])

    def _quantile_bisect(self, q: float) -> float:
        hi = 1.0 / self.beta
        while self.cdf(hi) < q:
            hi *= 2.0
            if hi > 1e300:
                raise DomainError(f"could not bracket quantile {q}")
        return optimize.brentq(lambda x: float(self.cdf(x)) - q, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)

    # -- sampling ----------------------------------------------------------
    def sample(self, size: int, rng=None, method: str = "inverse") -> np.ndarray:
        """Draw ``size`` lifetimes by inverse transform or by compounding."""
        rng = np.random.default_rng(rng)
        if size < 1:
            raise DomainError("size must be >= 1")
        if method == "inverse":
            u = rng.random(size)
            u = np.where(u == 0.0, np.finfo(float).tiny, u)
            return self.quantile(u)
        if method == "compound":
            if not self.has_latent_law:
                raise DomainError("compound sampling needs theta inside the family range")
            counts = self.family.sample_count(self.theta, rng, size)
            draws = gg_core.gg_sample(self.gg, rng, int(counts.sum()))
            starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
            return np.maximum.reduceat(draws, starts)
        raise DomainError(f"unknown sampling method {method!r}")

    # -- integrals ---------------------------------------------------------
    def _breakpoints(self, lower: float = 0.0):
        upper = self.quantile(UPPER_LEVEL)
        pts = [lower]
        pts += [b for b in self.quantile(np.array(_BREAK_LEVELS)) if lower < b < upper]
        pts.append(max(upper, lower))
        return pts

    def integrate(self, func, lower: float = 0.0) -> float:
        """Adaptive quadrature of ``func`` over ``(lower, quantile(1 - 1e-12))``."""
        pts = self._breakpoints(lower)
        if lower == 0.0 and self.alpha < 1:
            # the x**(alpha-1) spike at zero gets its own substituted piece
            first = self.quantile(0.25)
            pts = [0.0] + [b for b in pts if b >= first]
        total = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            if b <= a:
                continue
            if a == 0.0 and self.alpha < 1:
                total += _quad_power_singular(func, b, 1.0 / self.alpha)
            else:
                total += integrate.quad(func, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)[0]
        return total

    def moment(self, r: int = 1, method: str = "quadrature", strict: bool = False) -> float:
        """Raw moment ``E X**r``.

        ``method="series"`` evaluates the triple series; when that is too
        ill-conditioned it falls back to quadrature with a warning, or
        raises :class:`SeriesDivergence` if ``strict``.
        """
        if r < 1 or int(r) != r:
            raise DomainError("moment order must be a positive integer")
        if method == "series":
            from .series import moment_series

            try:
                return moment_series(self, int(r))
            except SeriesDivergence as exc:
                if strict:
                    raise
                warnings.warn(f"moment series abandoned ({exc}); using quadrature", stacklevel=2)
        elif method != "quadrature":
            raise DomainError(f"unknown moment method {method!r}")
        return self.integrate(lambda x: x**r * float(self.pdf(x)))

    def mean(self) -> float:
        return self.moment(1)

    def laplace(self, s: float, method: str = "quadrature") -> float:
        """Laplace transform ``E exp(-s X)`` for ``s > gamma``."""
        if not s > self.gamma:
            raise DomainError("Laplace transform requires s > gamma")
        if method == "series":
            from .series import laplace_series

            return laplace_series(self, s)
        return self.integrate(lambda x: math.exp(-s * x) * float(self.pdf(x)))

    def mgf(self, t: float, method: str = "quadrature") -> float:
        """Moment generating function ``E exp(t X)``.

        Finite for every ``t`` when ``gamma > 0``; the generalized-exponential
        limit has an exponential tail and needs ``t < beta``.
        """
        if self.gamma < GAMMA_ZERO and t >= self.beta:
            raise DomainError("mgf diverges for t >= beta when gamma = 0")
        if method == "series":
            from .series import laplace_series

            return laplace_series(self, -t)
        return self.integrate(lambda x: math.exp(t * x) * float(self.pdf(x)))

    def entropy(self, method: str = "quadrature") -> float:
        """Shannon (differential) entropy ``E[-log f(X)]``.

        ``method="closed"`` evaluates the decomposition into ``log`` constant,
        ``gamma E X``, ``(beta/gamma)(M_X(gamma) - 1)`` and the two latent-count
        expectations; it needs ``gamma > 0`` and a genuine latent law.
        """
        if method == "quadrature":
            def integrand(x):
                lp = float(self.logpdf(x))
                return -math.exp(lp) * lp if np.isfinite(lp) else 0.0

            return self.integrate(integrand)
        if method != "closed":
            raise DomainError(f"unknown entropy method {method!r}")
        if self.gamma < GAMMA_ZERO or not self.has_latent_law:
            raise SeriesDivergence("closed entropy form needs gamma > 0 and theta in range")
        a, b, g, th = self.alpha, self.beta, self.gamma, self.theta
        ns, ps = self.family.pmf_table(th)
        kappa = self.family.log_theta_over_c(th)[0]
        e_inv_n = float(np.dot(ps, 1.0 / ns))
        e_a = 0.0
        for n, p in zip(ns, ps):
            val = integrate.quad(
                lambda u, n=n: n * u ** (n - 1) * float(self.family.log_dc(th * u)),
                0.0, 1.0, epsabs=1e-12, epsrel=1e-10, limit=200,
            )[0]
            e_a += p * val
        mu1 = self.moment(1)
        m_g = self.mgf(g)
        return float(
            -(kappa + math.log(a * b)) - g * mu1 + (b / g) * (m_g - 1.0)
            + (a - 1.0) / a * e_inv_n - e_a
        )

    def mean_residual_life(self, s: float, method: str | None = None) -> float:
        """``E[X - s | X > s]``.

        ``mixture`` sums ``int_s^inf x g_n(x) dx`` over the latent law;
        ``survival`` integrates the survival function instead.  The default
        is ``mixture`` when a latent law exists and ``survival`` otherwise.
        """
        if method is None:
            method = "mixture" if self.has_latent_law else "survival"
        if s < 0:
            raise DomainError("age s must be nonnegative")
        surv = float(self.sf(s))
        if not surv > 0:
            raise DomainError("survival underflows at this age")
        if method == "survival":
            return self.integrate(lambda x: float(self.sf(x)), lower=s) / surv
        if method != "mixture":
            raise DomainError(f"unknown method {method!r}")
        if not self.has_latent_law:
            raise DomainError("mixture form needs theta inside the family range")
        ns, ps = self.family.pmf_table(self.theta)
        tail = 0.0
        for n, p in zip(ns, ps):
            tail += p * _partial_first_moment(self.gg.with_alpha(n * self.alpha), s)
        return tail / surv - s

    # -- order statistics --------------------------------------------------
    def order_stat_pdf(self, spec, x):
        from .order_stats import order_stat_pdf

        return order_stat_pdf(self, spec, x)

    def order_stat_cdf(self, spec, x):
        from .order_stats import order_stat_cdf

        return order_stat_cdf(self, spec, x)

    def order_stat_moment(self, spec, r: int = 1) -> float:
        from .order_stats import order_stat_moment

        return order_stat_moment(self, spec, r)

    # -- hazard shape ------------------------------------------------------
    def hazard_shape(self) -> HazardShape:
        """Shape class: increasing for ``alpha >= 1``, else decreasing/bathtub."""
        return HazardShape.INCREASING if self.alpha >= 1 else HazardShape.DECREASING_BATHTUB

    def check_hazard_shape(self, points: int = 400, lo_level: float = 1e-6, hi_level: float = 1 - 1e-6) -> HazardShapeCheck:
        """Evaluate the hazard on a log-spaced grid and count turning points."""
        lo, hi = self.quantile(np.array([lo_level, hi_level]))
        grid = np.geomspace(lo, hi, points)
        h = self.hazard(grid)
        d = np.diff(h)
        tol = 1e-9 * np.max(np.abs(h))
        signs = np.sign(np.where(np.abs(d) <= tol, 0.0, d))
        nz = np.flatnonzero(signs)
        changes = [i for a, i in zip(nz[:-1], nz[1:]) if signs[a] != signs[i]]
        return HazardShapeCheck(
            grid=grid,
            hazard=h,
            sign_changes=len(changes),
            turning_points=tuple(float(grid[i]) for i in changes),
            increasing=not np.any(signs < 0),
            starts_decreasing=bool(len(nz) and signs[nz[0]] < 0),
        )


@dataclass(frozen=True)
class GgModel:
    """The uncompounded GG law, used for the Gompertz and GG sub-models."""

    gg: GgParams

    @property
    def alpha(self) -> float:
        return self.gg.alpha

    @property
    def beta(self) -> float:
        return self.gg.beta

    @property
    def gamma(self) -> float:
        return self.gg.gamma

    @property
    def params(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma])

    def cdf(self, x):
        return gg_core.gg_cdf(self.gg, x)

    def sf(self, x):
        return gg_core.gg_sf(self.gg, x)

    survival = sf

    def logpdf(self, x):
        return gg_core.gg_logpdf(self.gg, x)

    def pdf(self, x):
        return gg_core.gg_pdf(self.gg, x)

    def hazard(self, x):
        s = self.sf(x)
        if np.any(s <= 0):
            raise DomainError("hazard undefined where the survival function underflows")
        return self.pdf(x) / s

    def quantile(self, q):
        return gg_core.gg_quantile(self.gg, q)

    def sample(self, size: int, rng=None, method: str = "inverse") -> np.ndarray:
        return gg_core.gg_sample(self.gg, np.random.default_rng(rng), size)


class GggExtendedModel(GgpsModel):
    """Geometric compounding in the Marshall-Olkin parameterization.

    ``theta_star = 1 - theta`` may be any positive number; ``theta_star > 1``
    (``theta < 0``) has no latent-count interpretation but is still a
    proper lifetime density.
    """

    def __init__(self, gg: GgParams, theta_star: float):
        if not (theta_star > 0 and math.isfinite(theta_star)):
            raise DomainError("theta_star must be positive")
        super().__init__(Geometric(), gg, 1.0 - float(theta_star))

    def _check_theta(self):
        if not self.theta < 1:
            raise DomainError("extended geometric model needs theta < 1")

    @property
    def theta_star(self) -> float:
        return 1.0 - self.theta


def make_model(family: PowerSeriesFamily, alpha, beta, gamma, theta) -> GgpsModel:
    """Build a model, switching to the extended form for geometric ``theta <= 0``."""
    gg = GgParams(alpha, beta, gamma)
    if isinstance(family, Geometric) and theta <= 0:
        return GggExtendedModel(gg, 1.0 - theta)
    return GgpsModel(family, gg, theta)


def _quad_power_singular(func, b: float, power: float) -> float:
    """``int_0^b func`` for ``func ~ x**(1/power - 1)`` near zero.

    Substituting ``x = b v**power`` makes that endpoint behaviour flat.
    """

    def integrand(v):
        if v == 0.0:
            return 0.0
        x = b * v**power
        return func(x) * power * b * v ** (power - 1.0)

    return integrate.quad(integrand, 0.0, 1.0, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)[0]


def _partial_first_moment(p: GgParams, s: float) -> float:
    """``int_s^inf x g(x) dx`` for GG parameters ``p``."""
    upper = float(gg_core.gg_quantile(p, UPPER_LEVEL))
    if s >= upper:
        return 0.0
    pts = [s] + [b for b in gg_core.gg_quantile(p, np.array(_BREAK_LEVELS)) if s < b < upper] + [upper]
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += integrate.quad(
            lambda x: x * float(gg_core.gg_pdf(p, x)), a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200
        )[0]
    return total
