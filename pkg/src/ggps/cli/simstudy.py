"""Monte Carlo study of the EM estimators: AE, SEE and ASE per grid cell."""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, GgpsError
from ..estimation import FitConfig, fit_em, model_spec
from ..gg_core import GgParams
from ..power_series import get_family

_MODEL_OF_FAMILY = {"geometric": "ggg", "poisson": "ggp", "logarithmic": "ggl", "binomial": "ggb"}


@dataclass(frozen=True)
class SimStudyConfig:
    """Grid over ``(n, alpha, theta)`` at fixed ``beta`` and ``gamma``.

    ``init_at_truth`` starts EM at the generating parameters instead of the
    data-based default start.
    """

    family: str = "geometric"
    alphas: tuple[float, ...] = (1.0,)
    thetas: tuple[float, ...] = (0.5,)
    beta: float = 1.0
    gamma: float = 0.1
    sizes: tuple[int, ...] = (100,)
    replications: int = 1000
    seed: int = 0
    m: int = 5
    max_iter: int = 500
    init_at_truth: bool = False

    def __post_init__(self):
        if self.replications < 1:
            raise DomainError("replications must be >= 1")
        if not self.sizes or min(self.sizes) < 5:
            raise DomainError("sample sizes must be >= 5")
        fam = get_family(self.family, self.m)
        if fam.name not in _MODEL_OF_FAMILY:
            raise DomainError(f"unknown family {self.family!r}")
        for a in self.alphas:
            GgParams(a, self.beta, self.gamma)
        if self.gamma <= 0:
            raise DomainError("EM needs gamma > 0")
        for th in self.thetas:
            fam.check_theta(th)

    @property
    def model(self) -> str:
        return _MODEL_OF_FAMILY[get_family(self.family, self.m).name]

    def cells(self) -> list[tuple[int, float, float]]:
        return list(itertools.product(self.sizes, self.alphas, self.thetas))


@dataclass(frozen=True)
class CellResult:
    n: int
    alpha: float
    theta: float
    param_names: tuple[str, ...]
    truth: np.ndarray
    ae: np.ndarray
    see: np.ndarray | None
    ase: np.ndarray
    failure_fraction: float
    replications: int
    worst_descent: float

    def rows(self):
        for i, name in enumerate(self.param_names):
            yield (
                self.n, self.alpha, self.theta, name, float(self.truth[i]), float(self.ae[i]),
                None if self.see is None else float(self.see[i]), float(self.ase[i]), self.failure_fraction,
            )


TABLE_COLUMNS = ("n", "alpha", "theta", "param", "true", "AE", "SEE", "ASE", "fail_frac")


def _replicate(task):
    """One dataset and EM fit; returns (estimates, std errors, converged, worst descent)."""
    config, (n, alpha, theta), seed_seq = task
    spec = model_spec(config.model, config.m)
    truth = np.array([alpha, config.beta, config.gamma, theta])
    model = spec.build(truth)
    rng = np.random.default_rng(seed_seq)
    x = model.sample(n, rng)
    init = tuple(truth) if config.init_at_truth else None
    try:
        r = fit_em(spec, x, FitConfig(method="em", init=init, max_iter=config.max_iter))
    except (GgpsError, ArithmeticError, ValueError):
        return None
    steps = np.diff(r.trace)
    descent = float(max(0.0, -steps.min())) if steps.size else 0.0
    return r.estimates, r.std_errors, r.converged, descent


def run_simstudy(config: SimStudyConfig, workers: int = 1) -> list[CellResult]:
    """Simulate and fit every replication of every cell.

    Replication seeds come from ``SeedSequence(config.seed)`` spawned once per
    cell and once per replication, so results do not depend on ``workers``.
    AE and SEE are the mean and standard deviation (``ddof=1``) of converged
    estimates; ASE averages their finite standard errors.  SEE is ``None`` when
    fewer than two replications converged.
    """
    cells = config.cells()
    cell_seeds = np.random.SeedSequence(config.seed).spawn(len(cells))
    tasks = [
        (config, cell, s)
        for cell, cs in zip(cells, cell_seeds)
        for s in cs.spawn(config.replications)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_replicate, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        outcomes = [_replicate(t) for t in tasks]
    names = model_spec(config.model, config.m).param_names
    results = []
    for c, (n, alpha, theta) in enumerate(cells):
        chunk = outcomes[c * config.replications:(c + 1) * config.replications]
        ok = [o for o in chunk if o is not None and o[2]]
        est = np.array([o[0] for o in ok]).reshape(-1, len(names))
        se = np.array([o[1] for o in ok]).reshape(-1, len(names))
        with np.errstate(invalid="ignore"):
            ae = est.mean(axis=0) if len(ok) else np.full(len(names), np.nan)
            see = est.std(axis=0, ddof=1) if len(ok) > 1 else None
            ase = np.array([np.nanmean(col) if np.isfinite(col).any() else np.nan for col in se.T]) \
                if len(ok) else np.full(len(names), np.nan)
        descents = [o[3] for o in chunk if o is not None]
        results.append(CellResult(
            n=n, alpha=alpha, theta=theta, param_names=names,
            truth=np.array([alpha, config.beta, config.gamma, theta]),
            ae=ae, see=see, ase=ase,
            failure_fraction=1.0 - len(ok) / config.replications,
            replications=config.replications,
            worst_descent=max(descents, default=0.0),
        ))
    return results
