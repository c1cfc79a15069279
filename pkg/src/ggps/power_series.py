"""Zero-truncated power-series laws for the latent number of failure causes.

A member of the class has pmf ``P(N = n) = a_n theta**n / C(theta)`` for
``n >= 1``.  The four shipped families are geometric, Poisson, logarithmic
and binomial.  Each one also provides the cancellation-safe building blocks
that the compounded lifetime distribution needs (ratios of ``C`` and of its
derivatives); the base class has generic fallbacks for those, so a new family
only has to supply ``log_coef``, ``_c_funcs`` and ``theta_range``.
"""

from __future__ import annotations

import functools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

#: Tail mass below which the latent-count pmf is truncated.
TAIL_TOL = 1e-15
#: Hard cap on the latent-count support used for tables and sampling.
N_CAP = 10_000


class PowerSeriesFamily(ABC):
    """Abstract zero-truncated power-series distribution."""

    name: str = "power-series"
    short: str = "ps"

    # -- required surface -------------------------------------------------
    @abstractmethod
    def theta_range(self) -> tuple[float, float]:
        """Open interval of admissible ``theta``."""

    @abstractmethod
    def log_coef(self, n):
        """``log a_n`` (``-inf`` where the coefficient vanishes)."""

    @abstractmethod
    def _c_funcs(self, theta):
        """Unchecked ``(C, C', C'', C''')``; also used at ``theta = 0``."""

    def max_support(self) -> int | None:
        return None

    # -- public helpers ---------------------------------------------------
    def check_theta(self, theta) -> None:
        lo, hi = self.theta_range()
        th = np.asarray(theta, dtype=float)
        if not np.all((th > lo) & (th < hi)):
            raise DomainError(f"theta={theta!r} outside ({lo}, {hi}) for {self.name}")

    def coef(self, n: int) -> float:
        if n < 1:
            raise DomainError("n must be >= 1")
        return float(np.exp(self.log_coef(n)))

    def min_support(self) -> int:
        """Smallest ``n`` with ``a_n > 0``."""
        n = 1
        while not np.isfinite(self.log_coef(n)):
            n += 1
        return n

    def c_funcs(self, theta):
        """Return ``(C, C', C'', C''')`` at an admissible ``theta``."""
        self.check_theta(theta)
        return self._c_funcs(theta)

    def C(self, theta):
        return self._c_funcs(theta)[0]

    def c_inverse(self, y):
        """Solve ``C(theta) = y`` for ``theta`` by bisection on the range."""
        y = float(y)
        if not y > 0:
            raise DomainError("C^{-1} needs y > 0")
        lo, hi = self.theta_range()
        if math.isinf(hi):
            hi = 1.0
            while self._c_funcs(hi)[0] < y:
                hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self._c_funcs(mid)[0] < y:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def pmf(self, theta, n):
        self.check_theta(theta)
        return np.exp(self.log_pmf(theta, n))

    def log_pmf(self, theta, n):
        n = np.asarray(n)
        if np.any(n < 1):
            raise DomainError("latent count must be >= 1")
        return self.log_coef(n) + n * np.log(theta) - np.log(self.C(theta))

    def pmf_table(self, theta):
        """Support ``1..n_cut`` and pmf values, truncated at ``TAIL_TOL``."""
        self.check_theta(theta)
        return _pmf_table(self, float(theta))

    def mean(self, theta) -> float:
        n, p = self.pmf_table(theta)
        return float(np.dot(n, p))

    def sample_count(self, theta, rng: np.random.Generator, size=None):
        """Draw latent counts by inverse-cdf search over the cumulative pmf."""
        n, p = self.pmf_table(theta)
        cdf = np.cumsum(p)
        cdf /= cdf[-1]
        u = rng.random(size)
        idx = np.searchsorted(cdf, u, side="right")
        out = n[np.minimum(idx, len(n) - 1)]
        return int(out) if size is None else out

    # -- blocks for the compounded distribution ---------------------------
    # ``y`` below is ``theta * t**alpha`` and lies in [0, theta].
    def log_theta_over_c(self, theta):
        """``log(theta) - log C(theta)`` and its first two derivatives."""
        c, c1, c2, _ = self._c_funcs(theta)
        r = c1 / c
        return (np.log(theta) - np.log(c), 1.0 / theta - r, -1.0 / theta**2 - (c2 / c - r * r))

    def log_dc(self, y):
        return np.log(self._c_funcs(y)[1])

    def dc_ratio(self, y):
        """``C''(y) / C'(y)``."""
        _, c1, c2, _ = self._c_funcs(y)
        return c2 / c1

    def dc_ratio2(self, y):
        """``C'''(y) / C'(y)``."""
        _, c1, _, c3 = self._c_funcs(y)
        return c3 / c1

    def cdf_ratio(self, theta, u):
        """``C(theta u) / C(theta)`` for ``u`` in [0, 1]."""
        return self._c_funcs(theta * np.asarray(u))[0] / self._c_funcs(theta)[0]

    def sf_ratio(self, theta, v):
        """``1 - C(theta (1 - v)) / C(theta)``, accurate for small ``v``."""
        return 1.0 - self.cdf_ratio(theta, 1.0 - np.asarray(v))

    def quantile_ratio(self, theta, q):
        """``C^{-1}(q C(theta)) / theta``: the base-cdf level for probability q."""
        c = self._c_funcs(theta)[0]
        return np.vectorize(lambda qq: self.c_inverse(qq * c) / theta)(q)


@functools.lru_cache(maxsize=256)
def _pmf_table(family: PowerSeriesFamily, theta: float):
    cap = family.max_support() or N_CAP
    n = np.arange(1, cap + 1)
    logp = family.log_pmf(theta, n)
    p = np.exp(logp)
    tail = np.cumsum(p[::-1])[::-1]  # tail[k] = sum_{j >= k} p_j
    beyond = np.append(tail[1:], 0.0)
    cut = int(np.argmax(beyond < TAIL_TOL)) if np.any(beyond < TAIL_TOL) else cap - 1
    n, p = n[: cut + 1], p[: cut + 1]
    n.flags.writeable = False
    p.flags.writeable = False
    return n, p


@dataclass(frozen=True)
class Geometric(PowerSeriesFamily):
    name = "geometric"
    short = "G"

    def theta_range(self):
        return (0.0, 1.0)

    def log_coef(self, n):
        return np.zeros_like(np.asarray(n, dtype=float))

    def _c_funcs(self, theta):
        th = np.asarray(theta, dtype=float)
        q = 1.0 - th
        return th / q, q**-2, 2.0 * q**-3, 6.0 * q**-4

    def c_inverse(self, y):
        if not y > 0:
            raise DomainError("C^{-1} needs y > 0")
        return y / (1.0 + y)

    # The forms below stay valid for every theta < 1, which is what the
    # Marshall-Olkin extension (theta* = 1 - theta > 0) relies on.
    def log_theta_over_c(self, theta):
        q = 1.0 - theta
        return np.log1p(-theta), -1.0 / q, -1.0 / q**2

    def log_dc(self, y):
        return -2.0 * np.log1p(-y)

    def dc_ratio(self, y):
        return 2.0 / (1.0 - y)

    def dc_ratio2(self, y):
        return 6.0 / (1.0 - y) ** 2

    def cdf_ratio(self, theta, u):
        return (1.0 - theta) * u / (1.0 - theta * u)

    def sf_ratio(self, theta, v):
        return v / (1.0 - theta + theta * v)

    def quantile_ratio(self, theta, q):
        return q / (1.0 - theta + theta * q)


@dataclass(frozen=True)
class Poisson(PowerSeriesFamily):
    name = "poisson"
    short = "P"

    def theta_range(self):
        return (0.0, math.inf)

    def log_coef(self, n):
        return -gammaln(np.asarray(n, dtype=float) + 1.0)

    def _c_funcs(self, theta):
        th = np.asarray(theta, dtype=float)
        e = np.exp(th)
        return np.expm1(th), e, e, e

    def c_inverse(self, y):
        if not y > 0:
            raise DomainError("C^{-1} needs y > 0")
        return math.log1p(y)

    def log_pmf(self, theta, n):
        n = np.asarray(n)
        if np.any(n < 1):
            raise DomainError("latent count must be >= 1")
        return self.log_coef(n) + n * np.log(theta) - _log_expm1(theta)

    def log_theta_over_c(self, theta):
        r = 1.0 / -np.expm1(-theta)  # C'/C = e^th / (e^th - 1)
        return (
            np.log(theta) - _log_expm1(theta),
            1.0 / theta - r,
            -1.0 / theta**2 - (r - r * r),
        )

    def log_dc(self, y):
        return np.asarray(y, dtype=float)

    def dc_ratio(self, y):
        return np.ones_like(np.asarray(y, dtype=float))

    def dc_ratio2(self, y):
        return np.ones_like(np.asarray(y, dtype=float))

    def cdf_ratio(self, theta, u):
        return np.expm1(theta * np.asarray(u)) / np.expm1(theta)

    def sf_ratio(self, theta, v):
        v = np.asarray(v)
        # (e^th - e^{th u}) / (e^th - 1) with u = 1 - v
        return np.exp(-theta * v) * np.expm1(theta * v) / -np.expm1(-theta)

    def quantile_ratio(self, theta, q):
        return np.log1p(np.asarray(q) * np.expm1(theta)) / theta


@dataclass(frozen=True)
class Logarithmic(PowerSeriesFamily):
    name = "logarithmic"
    short = "L"

    def theta_range(self):
        return (0.0, 1.0)

    def log_coef(self, n):
        return -np.log(np.asarray(n, dtype=float))

    def _c_funcs(self, theta):
        th = np.asarray(theta, dtype=float)
        q = 1.0 - th
        return -np.log1p(-th), 1.0 / q, q**-2, 2.0 * q**-3

    def c_inverse(self, y):
        if not y > 0:
            raise DomainError("C^{-1} needs y > 0")
        return -math.expm1(-y)

    def log_theta_over_c(self, theta):
        c = -np.log1p(-theta)
        r = 1.0 / ((1.0 - theta) * c)
        c2 = 1.0 / (1.0 - theta) ** 2 / c
        return np.log(theta) - np.log(c), 1.0 / theta - r, -1.0 / theta**2 - (c2 - r * r)

    def log_dc(self, y):
        return -np.log1p(-np.asarray(y))

    def dc_ratio(self, y):
        return 1.0 / (1.0 - np.asarray(y))

    def dc_ratio2(self, y):
        return 2.0 / (1.0 - np.asarray(y)) ** 2

    def cdf_ratio(self, theta, u):
        return np.log1p(-theta * np.asarray(u)) / np.log1p(-theta)

    def sf_ratio(self, theta, v):
        return np.log1p(theta * np.asarray(v) / (1.0 - theta)) / -np.log1p(-theta)

    def quantile_ratio(self, theta, q):
        return -np.expm1(np.asarray(q) * np.log1p(-theta)) / theta


@dataclass(frozen=True)
class Binomial(PowerSeriesFamily):
    m: int = 5
    name = "binomial"
    short = "B"

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise DomainError("binomial family needs an integer m >= 1")

    def theta_range(self):
        return (0.0, math.inf)

    def max_support(self):
        return int(self.m)

    def log_coef(self, n):
        n = np.asarray(n, dtype=float)
        m = float(self.m)
        with np.errstate(invalid="ignore"):
            out = gammaln(m + 1) - gammaln(n + 1) - gammaln(np.maximum(m - n, 0) + 1)
        return np.where(n > m, -np.inf, out)

    def _c_funcs(self, theta):
        th = np.asarray(theta, dtype=float)
        m = self.m
        b = 1.0 + th
        return (
            np.expm1(m * np.log1p(th)),
            m * b ** (m - 1),
            m * (m - 1) * b ** (m - 2),
            m * (m - 1) * (m - 2) * b ** (m - 3),
        )

    def c_inverse(self, y):
        if not y > 0:
            raise DomainError("C^{-1} needs y > 0")
        return math.expm1(math.log1p(y) / self.m)

    def log_pmf(self, theta, n):
        n = np.asarray(n)
        if np.any(n < 1):
            raise DomainError("latent count must be >= 1")
        return self.log_coef(n) + n * np.log(theta) - np.log(np.expm1(self.m * np.log1p(theta)))

    def log_theta_over_c(self, theta):
        m = self.m
        c = np.expm1(m * np.log1p(theta))
        b = 1.0 + theta
        r = m * b ** (m - 1) / c
        c2 = m * (m - 1) * b ** (m - 2) / c
        return np.log(theta) - np.log(c), 1.0 / theta - r, -1.0 / theta**2 - (c2 - r * r)

    def log_dc(self, y):
        return math.log(self.m) + (self.m - 1) * np.log1p(np.asarray(y))

    def dc_ratio(self, y):
        return (self.m - 1) / (1.0 + np.asarray(y))

    def dc_ratio2(self, y):
        return (self.m - 1) * (self.m - 2) / (1.0 + np.asarray(y)) ** 2

    def cdf_ratio(self, theta, u):
        m = self.m
        return np.expm1(m * np.log1p(theta * np.asarray(u))) / np.expm1(m * np.log1p(theta))

    def sf_ratio(self, theta, v):
        m = self.m
        y = theta * (1.0 - np.asarray(v))
        num = np.exp(m * np.log1p(y)) * np.expm1(m * np.log1p(theta * np.asarray(v) / (1.0 + y)))
        return num / np.expm1(m * np.log1p(theta))

    def quantile_ratio(self, theta, q):
        m = self.m
        return np.expm1(np.log1p(np.asarray(q) * np.expm1(m * np.log1p(theta))) / m) / theta


def _log_expm1(x):
    x = np.asarray(x, dtype=float)
    return np.where(x > 30, x + np.log1p(-np.exp(-np.minimum(x, 700))), np.log(np.expm1(np.minimum(x, 30))))


FAMILIES = {
    "geometric": Geometric,
    "poisson": Poisson,
    "logarithmic": Logarithmic,
    "binomial": Binomial,
}


def get_family(name: str, m: int = 5) -> PowerSeriesFamily:
    """Look up a family by name (``geometric``, ``poisson``, ...) or model tag."""
    key = name.lower()
    aliases = {"ggg": "geometric", "ggp": "poisson", "ggl": "logarithmic", "ggb": "binomial"}
    key = aliases.get(key, key)
    if key == "binomial":
        return Binomial(m)
    try:
        return FAMILIES[key]()
    except KeyError:
        raise DomainError(f"unknown power-series family {name!r}") from None
