"""Acceptance suite: one test per acceptance criterion.

The Monte Carlo criterion runs a 200-replication smoke variant by default;
set ``GGPS_FULL_SIMSTUDY=1`` to also run the 1000-replication version.
"""

import os
import time
import warnings

import numpy as np
import pytest
from scipy import integrate, stats

from ggps import GgParams, GgpsModel
from ggps.cli import SimStudyConfig, run_simstudy
from ggps.estimation import FitConfig, fit, fit_em, model_spec
from ggps.gg_core import gg_cdf, gg_pdf
from ggps.gof import cm_ad, fit_gof, info_criteria

from conftest import FAMILIES, THETAS

MODELS = ("gompertz", "gg", "ggg", "ggp", "ggb", "ggl")
GGPS_MODELS = ("ggg", "ggp", "ggb", "ggl")

# published glass-fiber results: (-logL, K-S, AIC, AICC, BIC), n = 63
GLASS = {
    "gompertz": (14.8081, 0.1268, 33.6162, 33.8162, 37.9025),
    "gg": (14.1452, 0.1318, 34.2904, 34.6972, 40.7198),
    "ggg": (12.0529, 0.0993, 32.1059, 32.7956, 40.6784),
    "ggp": (13.0486, 0.1131, 34.0971, 34.78678, 42.6696),
    "ggb": (13.2670, 0.1167, 34.5340, 35.2236, 43.1065),
    "ggl": (13.6398, 0.1353, 35.2796, 35.9692, 43.8521),
}
GLASS_K = {"gompertz": 2, "gg": 3, "ggg": 4, "ggp": 4, "ggb": 4, "ggl": 4}
GLASS_GGG_CM_AD = (0.0792, 0.5103)

# published simulation cell: GGG, beta=1, gamma=0.1, n=100, alpha=1, theta=0.5
CELL_AE = (1.030, 0.875, 0.113, 0.517)
CELL_SEE = (0.262, 0.291, 0.155, 0.270)

EM_SLACK = 1e-10


def _quiet(fn, *args, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return fn(*args, **kw)


def _fit_all(data, names):
    t0 = time.perf_counter()
    out = {}
    for name in names:
        r = _quiet(fit, model_spec(name), data, FitConfig())
        out[name] = (r, fit_gof(r, data))
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def glass_fits(glass):
    return _fit_all(glass, MODELS)


@pytest.fixture(scope="module")
def phosphorus_fits(phosphorus):
    return _fit_all(phosphorus, ("gg", "ggp", "ggb", "ggl"))


def _cell_check(cell, ae_tol, see_tol):
    problems = []
    for i, name in enumerate(cell.param_names):
        if abs(cell.ae[i] - CELL_AE[i]) > ae_tol:
            problems.append(f"AE {name} {cell.ae[i]:.4f} vs {CELL_AE[i]}")
        if cell.see is None or abs(cell.see[i] - CELL_SEE[i]) > see_tol:
            problems.append(f"SEE {name} {None if cell.see is None else round(cell.see[i], 4)} vs {CELL_SEE[i]}")
    return problems


def _cell(replications):
    cfg = SimStudyConfig(family="geometric", alphas=(1.0,), thetas=(0.5,), beta=1.0, gamma=0.1,
                         sizes=(100,), replications=replications, seed=2024)
    t0 = time.perf_counter()
    (cell,) = _quiet(run_simstudy, cfg)
    return cell, time.perf_counter() - t0


@pytest.fixture(scope="module")
def smoke_cell():
    return _cell(200)


# 1 ------------------------------------------------------------------------------------
def test_glass_fiber_table(glass_fits):
    fits, elapsed = glass_fits
    problems = []
    for name, (loglik_neg, ks, aic, aicc, bic) in GLASS.items():
        r, g = fits[name]
        got = {"-logL": (-r.loglik, loglik_neg, 0.02), "K-S": (g.ks_stat, ks, 0.005),
               "AIC": (g.aic, aic, 0.05), "AICC": (g.aicc, aicc, 0.05), "BIC": (g.bic, bic, 0.05)}
        problems += [f"{name} {k}: {v:.5f} vs {ref}" for k, (v, ref, tol) in got.items() if abs(v - ref) > tol]
        if not r.converged:
            problems.append(f"{name} did not converge")
    assert not problems, problems
    assert elapsed < 120


# 2 ------------------------------------------------------------------------------------
def test_phosphorus_table(phosphorus_fits):
    fits, elapsed = phosphorus_fits
    gg, gg_gof = fits["gg"]
    problems = []
    if gg.loglik < 197.12:
        problems.append(f"gg logL {gg.loglik:.5f} < 197.12")
    if abs(gg_gof.ks_stat - 0.0923) > 0.005:
        problems.append(f"gg K-S {gg_gof.ks_stat:.4f}")
    for name in ("ggp", "ggb", "ggl"):
        r, _ = fits[name]
        theta = r.params["theta"]
        if not (theta <= 1e-6 and r.collapsed and any("collapse" in w for w in r.warnings)):
            problems.append(f"{name} does not collapse: theta={theta:.6g}, logL={r.loglik:.5f}")
        if abs(r.loglik - gg.loglik) > 0.01:
            problems.append(f"{name} logL {r.loglik:.5f} vs gg {gg.loglik:.5f}")
    assert not problems, problems
    assert elapsed < 120


# 3 ------------------------------------------------------------------------------------
def test_information_criteria_arithmetic():
    for name, (loglik_neg, _, aic, aicc, bic) in GLASS.items():
        got = info_criteria(-loglik_neg, GLASS_K[name], 63)
        np.testing.assert_allclose(got, (aic, aicc, bic), atol=1e-3, rtol=0, err_msg=name)


# 4 ------------------------------------------------------------------------------------
def test_simulation_cell_smoke(smoke_cell):
    cell, elapsed = smoke_cell
    problems = _cell_check(cell, 0.15, 0.15)
    assert not problems, problems
    assert elapsed < 300


@pytest.mark.slow
@pytest.mark.skipif(os.environ.get("GGPS_FULL_SIMSTUDY") != "1", reason="set GGPS_FULL_SIMSTUDY=1")
def test_simulation_cell_full():
    cell, elapsed = _cell(1000)
    problems = _cell_check(cell, 0.10, 0.10)
    assert not problems, problems
    assert elapsed < 1800


# 5a -----------------------------------------------------------------------------------
def test_normalization_grid():
    worst = 0.0
    count = 0
    for name, fam in FAMILIES.items():
        for alpha in (0.5, 1.0, 2.0):
            for theta in THETAS[name]:
                m = GgpsModel.from_params(fam, alpha, 1.0, 0.5, theta)
                worst = max(worst, abs(m.integrate(lambda x: float(m.pdf(x))) - 1.0))
                count += 1
    assert count == 48
    assert worst < 1e-8


# 5b -----------------------------------------------------------------------------------
def _random_point(spec, rng):
    est = np.array([rng.uniform(0.4, 3.0), rng.uniform(0.3, 3.0), rng.uniform(0.05, 1.5)])
    kind = spec.theta_kind
    theta = {"unit": rng.uniform(0.05, 0.95), "positive": rng.uniform(0.1, 4.0)}[kind]
    return np.append(est, theta)


def _central(f, p, rel=1e-5):
    out = []
    for i in range(p.size):
        h = rel * max(abs(p[i]), 0.05)
        e = np.zeros_like(p)
        e[i] = h
        out.append((f(p + e) - f(p - e)) / (2 * h))
    return np.array(out)


def test_score_and_hessian_identities():
    rng = np.random.default_rng(77)
    data = GgpsModel.from_params(FAMILIES["poisson"], 1.5, 1.0, 0.3, 1.0).sample(80, rng)
    worst_g = worst_h = 0.0
    points = 0
    for name in GGPS_MODELS:
        spec = model_spec(name)
        for _ in range(30):
            p = _random_point(spec, rng)
            _, grad, hess = spec.derivs(p, data, 2)
            num_g = _central(lambda q: spec.derivs(q, data, 0)[0], p)
            num_h = _central(lambda q: spec.derivs(q, data, 1)[1], p)
            worst_g = max(worst_g, np.max(np.abs(grad - num_g)) / np.max(np.abs(grad)))
            worst_h = max(worst_h, np.max(np.abs(hess - num_h)) / np.max(np.abs(hess)))
            points += 1
    assert points >= 100
    assert worst_g < 1e-5
    assert worst_h < 1e-4


# 5c -----------------------------------------------------------------------------------
def test_em_ascent(glass, phosphorus, smoke_cell):
    for data in (glass, phosphorus):
        for name in GGPS_MODELS:
            r = _quiet(fit_em, name, data)
            steps = np.diff(r.trace)
            assert np.all(steps >= -EM_SLACK * np.abs(r.trace[1:])), (data.label, name, steps.min())
    cell, _ = smoke_cell
    # replications at n=100 have |loglik| below 1e3
    assert cell.worst_descent <= EM_SLACK * 1e3


# 5d -----------------------------------------------------------------------------------
@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_sampler_equivalence(name):
    m = GgpsModel.from_params(FAMILIES[name], 1.3, 1.0, 0.2, THETAS[name][2])
    a = m.sample(10_000, np.random.default_rng(11), method="inverse")
    b = m.sample(10_000, np.random.default_rng(12), method="compound")
    assert stats.ks_2samp(a, b).pvalue > 0.01


# 5e -----------------------------------------------------------------------------------
def test_distribution_oracles():
    x = np.linspace(0.02, 5.0, 60)
    q = np.array([0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99])
    for name, fam in FAMILIES.items():
        c = 1  # smallest n with a_n > 0 for all four families
        for theta in THETAS[name]:
            m = GgpsModel.from_params(fam, 0.8, 1.2, 0.4, theta)
            # mixture over GG(n alpha) laws
            n = np.arange(1, 600)
            w = fam.pmf(theta, n)
            mix = sum(wi * gg_pdf(GgParams(ni * 0.8, 1.2, 0.4), x) for ni, wi in zip(n, w) if wi > 1e-300)
            assert np.max(np.abs(m.pdf(x) - mix)) < 1e-8
            # quantile round trip and hazard identity
            assert np.max(np.abs(m.cdf(m.quantile(q)) - q)) < 1e-10
            np.testing.assert_allclose(m.hazard(x) * m.sf(x), m.pdf(x), rtol=1e-10)
            # gamma -> 0 limit against the generalized-exponential compound
            small = GgpsModel.from_params(fam, 0.8, 1.2, 1e-8, theta)
            ge = fam.C(theta * (-np.expm1(-1.2 * x)) ** 0.8) / fam.C(theta)
            assert np.max(np.abs(small.cdf(x) - ge)) < 1e-5
        # theta -> 0 limits: cdf and first two moments
        tiny = GgpsModel.from_params(fam, 0.8, 1.2, 0.4, 1e-8)
        gg = GgParams(c * 0.8, 1.2, 0.4)
        assert np.max(np.abs(tiny.cdf(x) - gg_cdf(gg, x))) < 1e-5
        for r in (1, 2):
            oracle = integrate.quad(lambda t: t**r * gg_pdf(gg, t), 0, np.inf, limit=200)[0]
            assert tiny.moment(r) == pytest.approx(oracle, rel=1e-4)


# 5f -----------------------------------------------------------------------------------
def test_hazard_shapes():
    for name, fam in FAMILIES.items():
        for theta in THETAS[name]:
            for alpha in (1.0, 1.5, 3.0):
                check = GgpsModel.from_params(fam, alpha, 1.0, 0.3, theta).check_hazard_shape()
                assert check.increasing, (name, theta, alpha)
            for alpha in (0.3, 0.7):
                check = GgpsModel.from_params(fam, alpha, 1.0, 0.3, theta).check_hazard_shape()
                assert check.sign_changes <= 1, (name, theta, alpha)


# 6 ------------------------------------------------------------------------------------
def test_glass_fiber_cm_ad(glass_fits, glass):
    r, g = glass_fits[0]["ggg"]
    assert g.cm_stat == pytest.approx(GLASS_GGG_CM_AD[0], abs=0.01)
    assert g.ad_stat == pytest.approx(GLASS_GGG_CM_AD[1], abs=0.01)
    # pinned to the classical statistics, with no small-sample modification
    u = np.sort(r.model.cdf(glass.values))
    n = u.size
    i = np.arange(1, n + 1)
    w2 = np.sum((u - (2 * i - 1) / (2 * n)) ** 2) + 1 / (12 * n)
    a2 = -n - np.mean((2 * i - 1) * (np.log(u) + np.log1p(-u[::-1])))
    assert cm_ad(glass.values, r.model.cdf) == pytest.approx((w2, a2), rel=1e-12)


@pytest.mark.xfail(strict=True, reason="GGG information matrix on the glass data is ill-conditioned; "
                                       "published standard errors do not reproduce")
def test_glass_fiber_ggg_theta_standard_error(glass_fits):
    r, _ = glass_fits[0]["ggg"]
    assert r.std_errors[-1] == pytest.approx(0.0556, abs=0.005)
