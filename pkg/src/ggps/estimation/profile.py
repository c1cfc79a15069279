"""Profile log-likelihood over one parameter."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ..errors import DomainError
from .data import Dataset
from .fit import SCORE_TOL_PER_OBS, FitResult, _near_bounds, _objective, newton_polish
from .models import ModelSpec, model_spec


@dataclass(frozen=True)
class ProfilePoint:
    value: float
    loglik: float
    estimates: np.ndarray
    converged: bool


def profile_loglik(spec: ModelSpec | str, data, param: str, values, start=None) -> list[ProfilePoint]:
    """Maximize the log-likelihood over the other parameters at each ``value``.

    Each grid point is warm-started from its neighbour's optimum, beginning
    from ``start`` (a full parameter vector, typically the joint MLE).  Grid
    points whose inner maximization fails are returned with
    ``converged=False`` rather than raising.
    """
    spec = model_spec(spec) if isinstance(spec, str) else spec
    if isinstance(start, FitResult):
        start = start.estimates
    data = data if isinstance(data, Dataset) else Dataset(data)
    x = data.values
    if param not in spec.param_names:
        raise DomainError(f"{spec.label} has no parameter {param!r}; choose from {spec.param_names}")
    idx = spec.param_names.index(param)
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise DomainError("profile grid must be a non-empty 1-d sequence")
    est = np.asarray(start if start is not None else spec.default_init(data.mean), dtype=float)
    f = _objective(spec, x)
    base_bounds = spec.free_bounds()
    lo_nat, hi_nat = spec.natural_bounds()
    # sweep outward from the grid point nearest the start for better warm starts
    order = np.argsort(np.abs(values - est[idx]), kind="stable")
    results: dict[int, ProfilePoint] = {}
    for j in order:
        v = float(values[j])
        if not lo_nat[idx] <= v <= hi_nat[idx]:
            results[j] = ProfilePoint(v, -np.inf, np.full(spec.k, np.nan), False)
            continue
        nearest = [results[i].estimates for i in sorted(results, key=lambda i: abs(values[i] - v))
                   if results[i].converged]
        init = np.array(nearest[0] if nearest else est, dtype=float)
        init[idx] = v
        u0 = np.clip(spec.to_free(init), [b[0] for b in base_bounds], [b[1] for b in base_bounds])
        u_fix = float(spec.to_free(init)[idx])
        bounds = list(base_bounds)
        bounds[idx] = (u_fix, u_fix)
        u0[idx] = u_fix
        try:
            res = optimize.minimize(
                f, u0, jac=True, method="L-BFGS-B", bounds=bounds,
                options={"maxiter": 1000, "ftol": 1e-15, "gtol": 1e-10},
            )
            u = _polish_fixed(spec, res.x, x, idx)
            p = spec.from_free(u)[0]
            p[idx] = v
            val, grad, _ = spec.derivs(p, x, 1)
            mask = _near_bounds(spec, p, grad)
            mask[idx] = True
            ok = bool(np.isfinite(val) and np.linalg.norm(np.where(mask, 0.0, grad)) < SCORE_TOL_PER_OBS * x.size)
            results[j] = ProfilePoint(v, float(val), p, ok)
        except (DomainError, ValueError, ArithmeticError, np.linalg.LinAlgError):
            results[j] = ProfilePoint(v, -np.inf, np.full(spec.k, np.nan), False)
    return [results[j] for j in range(values.size)]


def _polish_fixed(spec: ModelSpec, u, x, idx: int):
    """Newton polish over the remaining coordinates, ``idx`` held fixed."""
    if spec.k == 1:
        return u
    sub = _FixedSpec(spec, idx, float(u[idx]))
    v = newton_polish(sub, np.delete(u, idx), x)
    return np.insert(v, idx, u[idx])


class _FixedSpec:
    """View of a spec with one coordinate frozen, as :func:`newton_polish` expects."""

    def __init__(self, spec: ModelSpec, idx: int, u_fixed: float):
        self._spec, self._idx, self._u = spec, idx, u_fixed
        self._p = float(spec.from_free(np.full(spec.k, u_fixed))[0][idx])
        self.k = spec.k - 1
        self.param_names = tuple(n for i, n in enumerate(spec.param_names) if i != idx)
        self.has_theta = spec.has_theta and idx != spec.k - 1
        self.extended = spec.extended

    def free_bounds(self):
        b = self._spec.free_bounds()
        return b[: self._idx] + b[self._idx + 1:]

    def from_free(self, v):
        full = np.insert(np.asarray(v, dtype=float), self._idx, self._u)
        return tuple(np.delete(a, self._idx) for a in self._spec.from_free(full))

    def to_free(self, p):
        full = np.insert(np.asarray(p, dtype=float), self._idx, self._p)
        return np.delete(self._spec.to_free(full), self._idx)

    def derivs(self, p, x, order=2):
        full = np.insert(np.asarray(p, dtype=float), self._idx, self._p)
        val, g, h = self._spec.derivs(full, x, order)
        if g is not None:
            g = np.delete(g, self._idx)
        if h is not None:
            h = np.delete(np.delete(h, self._idx, 0), self._idx, 1)
        return val, g, h
