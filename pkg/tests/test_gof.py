import math
import warnings

import numpy as np
import pytest
from scipy import stats

from ggps import DomainError
from ggps.gof import SIGNIFICANCE, cm_ad, gof_report, info_criteria, ks_test


@pytest.fixture
def sample():
    return stats.gamma(2.0).rvs(size=80, random_state=np.random.default_rng(12))


def test_ks_matches_scipy(sample):
    cdf = stats.gamma(2.0).cdf
    d, p = ks_test(sample, cdf)
    ref = stats.kstest(sample, cdf, method="asymp")
    assert d == pytest.approx(ref.statistic, rel=1e-14)
    assert p == pytest.approx(stats.kstwobign.sf(math.sqrt(sample.size) * d), rel=1e-14)


def test_cramer_von_mises_matches_scipy(sample):
    cdf = stats.gamma(2.2).cdf
    w2, _ = cm_ad(sample, cdf)
    assert w2 == pytest.approx(stats.cramervonmises(sample, cdf).statistic, rel=1e-12)


def test_anderson_darling_matches_integral_form(sample):
    # A^2 = n * int (F_n - F)^2 / (F (1 - F)) dF, evaluated piecewise exactly
    cdf = stats.gamma(1.8).cdf
    _, a2 = cm_ad(sample, cdf)
    u = np.sort(cdf(sample))
    n = u.size
    knots = np.concatenate([[0.0], u, [1.0]])
    total = 0.0
    for i in range(n + 1):
        a, b, c = knots[i], knots[i + 1], i / n
        # antiderivative of (c - t)^2 / (t (1 - t))
        def g(t):
            out = -t
            if c > 0:
                out += c * c * math.log(t) if t > 0 else 0.0
            if c < 1:
                out -= (1 - c) ** 2 * math.log1p(-t) if t < 1 else 0.0
            return out
        total += g(b) - g(a)
    assert a2 == pytest.approx(n * total, rel=1e-9)


def test_cm_ad_clamps_with_warning():
    x = np.array([0.1, 0.2, 0.3, 0.4, 100.0])
    with pytest.warns(RuntimeWarning):
        w2, a2 = cm_ad(x, lambda v: np.minimum(v, 1.0))
    assert np.isfinite(a2)


def test_info_criteria_formulas():
    aic, aicc, bic = info_criteria(-12.0529, 4, 63)
    assert aic == pytest.approx(2 * 4 + 2 * 12.0529)
    assert aicc == pytest.approx(aic + 2 * 4 * 5 / 58)
    assert bic == pytest.approx(4 * math.log(63) + 2 * 12.0529)
    with pytest.raises(DomainError):
        info_criteria(1.0, 4, 5)


def test_report_flags_rejection(sample):
    good = gof_report(sample, stats.gamma(2.0).cdf, -100.0, 2)
    bad = gof_report(sample, stats.expon(scale=0.3).cdf, -100.0, 1)
    assert not good.rejected and bad.rejected
    assert bad.ks_pvalue < SIGNIFICANCE == 0.10


def test_too_few_points():
    with pytest.raises(DomainError):
        ks_test([1.0, 2.0], stats.expon.cdf)
