from pathlib import Path

import numpy as np
import pytest
from scipy import stats as sps

from mpdp.errors import ConfigError
from mpdp.stats import (
    SampleBatch,
    chi_square_gof,
    chi_square_two_sample,
    ks_gof,
    ks_statistic,
    ks_two_sample,
    moment_check,
)

FIXTURES = Path(__file__).parent / "fixtures" / "statcheck"


class TestKsOneSample:
    def test_quantile_grid_construction(self):
        n = 100
        xs = np.arange(1, n + 1) / (n + 1)  # uniform quantiles i/(n+1)
        stat = ks_statistic(xs, lambda x: x)
        assert stat <= 1 / (n + 1) + 1 / n

    def test_constant_sample(self):
        stat = ks_statistic(np.full(50, 0.4), lambda x: np.clip(x, 0, 1))
        assert stat >= 0.5

    def test_oracle_uniform_below_critical(self):
        rng = np.random.default_rng(17)
        res = ks_gof(rng.uniform(size=10_000), lambda x: np.clip(x, 0, 1),
                     alpha=0.01)
        assert res.critical == pytest.approx(1.6276 / 100, abs=2e-5)  # 1.63/sqrt(n)
        assert res.statistic < res.critical and not res.reject


class TestKsTwoSample:
    def test_identical_samples(self):
        a = np.array([1.0, 2.0, 3.0])
        assert ks_two_sample(a, a.copy()).statistic == 0.0

    def test_disjoint_supports(self):
        res = ks_two_sample(np.linspace(0, 1, 50), np.linspace(5, 6, 50))
        assert res.statistic == 1.0 and res.reject

    def test_same_distribution_not_rejected(self):
        rng = np.random.default_rng(23)
        res = ks_two_sample(rng.normal(size=5000), rng.normal(size=5000),
                            alpha=0.01)
        assert not res.reject


class TestChiSquare:
    def test_zero_statistic(self):
        res = chi_square_gof([50, 50], [50.0, 50.0])
        assert res.statistic == 0.0 and not res.reject

    def test_bernoulli_critical_value(self):
        res = chi_square_gof([5100, 4900], [5000.0, 5000.0], alpha=0.01)
        assert res.critical == pytest.approx(6.635, abs=1e-2)

    def test_gross_skew_rejected(self):
        assert chi_square_gof([9000, 1000], [5000.0, 5000.0]).reject

    def test_binning_violations(self):
        with pytest.raises(ConfigError):
            chi_square_gof([10, 0], [9.0, 1.0])  # expected < 5
        with pytest.raises(ConfigError):
            chi_square_gof([10, 10], [5.0, 5.0])  # totals differ

    def test_two_sample_homogeneity(self):
        rng = np.random.default_rng(3)
        a = rng.integers(0, 4, size=2000)
        b = rng.integers(0, 4, size=2000)
        assert not chi_square_two_sample(a, b, alpha=0.01).reject
        c = np.concatenate([b, np.full(500, 3)])
        assert chi_square_two_sample(a, c, alpha=0.01).reject


class TestMomentCheck:
    def test_constant_sample_absolute_fallback(self):
        res = moment_check(np.full(100, 3.0), 3.0, 0.0, 0.01, 1e-12)
        assert res.ok

    def test_oracle_normal(self):
        rng = np.random.default_rng(8)
        res = moment_check(rng.normal(size=10_000), 0.0, 1.0, 0.03, 0.05)
        assert res.ok

    def test_shifted_mean_fails(self):
        rng = np.random.default_rng(8)
        res = moment_check(rng.normal(size=10_000) + 0.5, 0.0, 1.0, 0.03, 0.05)
        assert not res.ok


@pytest.fixture(scope="module")
def batches():
    files = sorted(FIXTURES.glob("batch_*.csv"))
    assert len(files) == 20
    return [SampleBatch.load(f) for f in files]


class TestFixtureCrossCheck:
    """Every statistic must match scipy's on the 20 frozen batches."""

    def test_ks_one_sample_matches_scipy(self, batches):
        for batch in batches:
            mine = ks_statistic(batch.values, sps.norm.cdf)
            ref = sps.kstest(batch.values, sps.norm.cdf).statistic
            assert mine == pytest.approx(ref, rel=1e-10)

    def test_ks_two_sample_matches_scipy(self, batches):
        for a, b in zip(batches[:10], batches[10:]):
            mine = ks_two_sample(a.values, b.values).statistic
            ref = sps.ks_2samp(a.values, b.values, method="asymp").statistic
            assert mine == pytest.approx(ref, rel=1e-10)

    def test_chi_square_matches_scipy(self, batches):
        for batch in batches:
            edges = np.quantile(batch.values, np.linspace(0, 1, 9))
            counts, _ = np.histogram(batch.values, bins=np.unique(edges))
            expected = np.full(counts.size, counts.sum() / counts.size)
            if np.any(expected < 5):
                continue
            mine = chi_square_gof(counts, expected).statistic
            ref = sps.chisquare(counts, expected).statistic
            assert mine == pytest.approx(ref, rel=1e-10)

    def test_roundtrip_save_load(self, tmp_path, batches):
        target = tmp_path / "copy.csv"
        batches[0].save(target)
        again = SampleBatch.load(target)
        assert np.array_equal(again.values, batches[0].values)
        assert again.metadata == batches[0].metadata
