"""Fittable model specifications and their unconstrained coordinates.

Every spec maps a free vector ``u`` (what the optimizer sees) to natural
parameters: ``log`` for positive quantities, ``logit`` for ``theta`` on
(0, 1), ``log`` for ``theta`` on (0, inf), and ``theta = 1 - exp(u)`` for the
extended geometric model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from ..errors import DomainError
from ..gg_core import GgParams
from ..ggps_dist import GggExtendedModel, GgModel, GgpsModel
from ..power_series import Geometric, PowerSeriesFamily, get_family
from . import likelihood

ALPHA_BOUNDS = (1e-3, 1e3)
BETA_BOUNDS = (1e-10, 1e8)
GAMMA_BOUNDS = (1e-10, 1e3)
THETA_FLOOR = 1e-10
THETA_CEIL = 1e6
#: Below this fitted theta a compounded model is reported as collapsed onto GG.
COLLAPSE_THETA = 1e-6

_THETA_KIND = {"geometric": "unit", "logarithmic": "unit", "poisson": "positive", "binomial": "positive"}


@dataclass(frozen=True)
class ModelSpec:
    """A named model: ``gompertz``, ``gg``, ``ggg``, ``ggp``, ``ggb``, ``ggl`` or ``ggg-ext``."""

    name: str
    family: PowerSeriesFamily | None = None
    extended: bool = False

    @property
    def has_alpha(self) -> bool:
        return self.name != "gompertz"

    @property
    def has_theta(self) -> bool:
        return self.family is not None

    @property
    def param_names(self) -> tuple[str, ...]:
        names = ("alpha", "beta", "gamma") if self.has_alpha else ("beta", "gamma")
        return names + ("theta",) if self.has_theta else names

    @property
    def k(self) -> int:
        return len(self.param_names)

    @property
    def label(self) -> str:
        if self.name == "ggb":
            return f"ggb(m={self.family.m})"
        return self.name

    @property
    def theta_kind(self) -> str:
        if self.extended:
            return "extended"
        return _THETA_KIND[self.family.name]

    # -- natural parameters <-> model objects ---------------------------------
    def full_params(self, est) -> tuple[float, float, float, float | None]:
        est = [float(v) for v in est]
        if not self.has_alpha:
            est = [1.0] + est
        theta = est[3] if self.has_theta else None
        return est[0], est[1], est[2], theta

    def build(self, est):
        a, b, g, th = self.full_params(est)
        gg = GgParams(a, b, g)
        if not self.has_theta:
            return GgModel(gg)
        if self.extended:
            return GggExtendedModel(gg, 1.0 - th)
        return GgpsModel(self.family, gg, th)

    def natural_of(self, model) -> np.ndarray:
        p = [model.alpha, model.beta, model.gamma]
        if not self.has_alpha:
            p = p[1:]
        if self.has_theta:
            p.append(model.theta)
        return np.array(p, dtype=float)

    # -- derivatives in natural parameters ------------------------------------
    def derivs(self, est, x, order: int = 2):
        a, b, g, th = self.full_params(est)
        if self.has_theta:
            val, grad, hess = likelihood.ggps_derivs(self.family, a, b, g, th, x, order)
        else:
            val, grad, hess = likelihood.gg_derivs(a, b, g, x, order)
        if not self.has_alpha and grad is not None:
            grad = grad[1:]
            hess = hess[1:, 1:] if hess is not None else None
        return val, grad, hess

    # -- unconstrained coordinates --------------------------------------------
    def _theta_to_u(self, th: float) -> float:
        kind = self.theta_kind
        if kind == "unit":
            return float(logit(th))
        if kind == "positive":
            return math.log(th)
        return math.log(1.0 - th)

    def to_free(self, est) -> np.ndarray:
        est = np.asarray(est, dtype=float)
        u = np.log(est[: self.k - self.has_theta])
        if self.has_theta:
            u = np.append(u, self._theta_to_u(est[-1]))
        return u

    def from_free(self, u):
        """Natural parameters with first and second derivatives ``dp/du``."""
        u = np.asarray(u, dtype=float)
        p = np.exp(u)
        d1 = p.copy()
        d2 = p.copy()
        if self.has_theta:
            v = u[-1]
            kind = self.theta_kind
            if kind == "unit":
                th = float(expit(v))
                p[-1], d1[-1], d2[-1] = th, th * (1 - th), th * (1 - th) * (1 - 2 * th)
            elif kind == "extended":
                star = math.exp(v)
                p[-1], d1[-1], d2[-1] = 1.0 - star, -star, -star
        return p, d1, d2

    def free_bounds(self) -> list[tuple[float, float]]:
        bounds = [ALPHA_BOUNDS] if self.has_alpha else []
        bounds += [BETA_BOUNDS, GAMMA_BOUNDS]
        out = [(math.log(lo), math.log(hi)) for lo, hi in bounds]
        if self.has_theta:
            kind = self.theta_kind
            if kind == "unit":
                out.append((float(logit(THETA_FLOOR)), float(logit(1.0 - THETA_FLOOR))))
            elif kind == "positive":
                out.append((math.log(THETA_FLOOR), math.log(THETA_CEIL)))
            else:
                out.append((math.log(THETA_FLOOR), math.log(1e3)))
        return out

    def natural_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Box in natural parameters matching :meth:`free_bounds`."""
        b = np.array(self.free_bounds())
        lo = self.from_free(b[:, 0])[0]
        hi = self.from_free(b[:, 1])[0]
        return np.minimum(lo, hi), np.maximum(lo, hi)

    def default_init(self, mean: float) -> np.ndarray:
        p = [1.0] if self.has_alpha else []
        p += [1.0 / mean, 0.1]
        if self.has_theta:
            p.append({"unit": 0.5, "positive": 1.0, "extended": 0.5}[self.theta_kind])
        return np.array(p)


_NAMES = {"gompertz", "gg", "ggg", "ggp", "ggb", "ggl", "ggg-ext"}


def model_spec(name: str, m: int = 5) -> ModelSpec:
    """Spec for a model tag (case-insensitive)."""
    key = name.lower()
    if key not in _NAMES:
        raise DomainError(f"unknown model {name!r}; choose from {sorted(_NAMES)}")
    if key in ("gompertz", "gg"):
        return ModelSpec(key)
    if key == "ggg-ext":
        return ModelSpec(key, Geometric(), extended=True)
    return ModelSpec(key, get_family(key, m))
