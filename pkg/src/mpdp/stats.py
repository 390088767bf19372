"""Goodness-of-fit and two-sample tests used by the acceptance suites.

Statistics are computed here from first principles (numpy only); the test
suite cross-checks them against an independent reference implementation on
frozen fixture batches. Critical values are asymptotic throughout; callers
keep sample sizes in the thousands so the asymptotics hold.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.stats import chi2 as _chi2_dist

from .errors import ConfigError


@dataclass
class SampleBatch:
    """A batch of scalar draws plus provenance metadata."""

    values: np.ndarray
    metadata: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.size == 0:
            raise ConfigError("sample batch must be nonempty")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("sample batch contains non-finite values")

    def save(self, csv_path) -> None:
        """CSV with a single ``value`` header column, JSON sidecar next to it."""
        csv_path = Path(csv_path)
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["value"])
            for v in self.values:
                writer.writerow([repr(float(v))])
        with open(csv_path.with_suffix(".json"), "w") as fh:
            json.dump(self.metadata, fh, sort_keys=True, indent=2)

    @classmethod
    def load(cls, csv_path) -> "SampleBatch":
        csv_path = Path(csv_path)
        with open(csv_path) as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["value"]:
                raise ConfigError(f"unexpected fixture header {header}")
            values = np.array([float(row[0]) for row in reader])
        sidecar = csv_path.with_suffix(".json")
        metadata = json.loads(sidecar.read_text()) if sidecar.exists() else {}
        return cls(values, metadata)


@dataclass(frozen=True)
class TestResult:
    statistic: float
    critical: float
    reject: bool
    detail: str = ""


def ks_asymptotic_c(alpha: float) -> float:
    """Kolmogorov critical coefficient c(alpha) = sqrt(-ln(alpha/2)/2)."""
    return math.sqrt(-math.log(alpha / 2.0) / 2.0)


def ks_statistic(values: np.ndarray, cdf: Callable) -> float:
    """Sup-distance between the empirical CDF and a reference CDF."""
    x = np.sort(np.asarray(values, dtype=np.float64))
    n = x.size
    f = np.asarray(cdf(x), dtype=np.float64)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def ks_gof(values: np.ndarray, cdf: Callable, alpha: float = 0.01) -> TestResult:
    stat = ks_statistic(values, cdf)
    crit = ks_asymptotic_c(alpha) / math.sqrt(len(values))
    return TestResult(stat, crit, stat > crit, "one-sample KS")


def ks_two_sample(a: np.ndarray, b: np.ndarray, alpha: float = 0.01) -> TestResult:
    """Two-sample KS with the asymptotic critical value c(a)*sqrt((m+n)/mn)."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ConfigError("both samples must be nonempty")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    stat = float(np.abs(fa - fb).max())
    crit = ks_asymptotic_c(alpha) * math.sqrt((a.size + b.size) / (a.size * b.size))
    return TestResult(stat, crit, stat > crit, "two-sample KS")


def chi_square_gof(counts, expected, alpha: float = 0.01) -> TestResult:
    """Pearson chi-square against given expected counts, df = bins - 1."""
    counts = np.asarray(counts, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    if counts.shape != expected.shape or counts.ndim != 1:
        raise ConfigError("counts and expected must be equal-length vectors")
    if abs(counts.sum() - expected.sum()) > 1e-6 * max(1.0, counts.sum()):
        raise ConfigError("expected counts must sum to the observed total")
    if np.any(expected < 5):
        raise ConfigError("each expected count must be >= 5; merge bins first")
    stat = float(((counts - expected) ** 2 / expected).sum())
    crit = float(_chi2_dist.ppf(1 - alpha, df=counts.size - 1))
    return TestResult(stat, crit, stat > crit, "chi-square GOF")


def chi_square_two_sample(a, b, alpha: float = 0.01) -> TestResult:
    """Homogeneity test for two samples over a discrete support.

    Bins are the observed support values; adjacent bins are merged until
    every expected count reaches 5. df = (bins - 1).
    """
    a = np.asarray(a)
    b = np.asarray(b)
    support = np.unique(np.concatenate([a, b]))
    ca = np.array([(a == v).sum() for v in support], dtype=np.float64)
    cb = np.array([(b == v).sum() for v in support], dtype=np.float64)
    ca, cb = _merge_sparse_bins(ca, cb)
    if ca.size < 2:
        raise ConfigError("two-sample chi-square needs at least 2 usable bins")
    na, nb = ca.sum(), cb.sum()
    pooled = (ca + cb) / (na + nb)
    ea, eb = na * pooled, nb * pooled
    stat = float((((ca - ea) ** 2) / ea).sum() + (((cb - eb) ** 2) / eb).sum())
    crit = float(_chi2_dist.ppf(1 - alpha, df=ca.size - 1))
    return TestResult(stat, crit, stat > crit, "chi-square homogeneity")


def _merge_sparse_bins(ca, cb, min_expected: float = 5.0):
    na, nb = ca.sum(), cb.sum()
    while ca.size > 1:
        pooled = (ca + cb) / (na + nb)
        ea, eb = na * pooled, nb * pooled
        small = np.where((ea < min_expected) | (eb < min_expected))[0]
        if small.size == 0:
            break
        i = small[0]
        j = i + 1 if i + 1 < ca.size else i - 1
        lo, hi = min(i, j), max(i, j)
        ca = np.concatenate([ca[:lo], [ca[lo] + ca[hi]], ca[hi + 1:]])
        cb = np.concatenate([cb[:lo], [cb[lo] + cb[hi]], cb[hi + 1:]])
    return ca, cb


@dataclass(frozen=True)
class MomentResult:
    ok: bool
    mean: float
    var: float


def moment_check(values, target_mean: float, target_var: float,
                 tol_mean: float, tol_var: float) -> MomentResult:
    """Pass iff the sample mean and variance sit inside the tolerances.

    The variance tolerance is relative; for a zero target it falls back to
    an absolute comparison.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size < 30:
        raise ConfigError("moment check needs at least 30 samples")
    m = float(values.mean())
    v = float(values.var(ddof=1))
    ok_mean = abs(m - target_mean) <= tol_mean
    if target_var == 0:
        ok_var = v <= tol_var
    else:
        ok_var = abs(v / target_var - 1.0) <= tol_var
    return MomentResult(ok_mean and ok_var, m, v)
