"""Monte Carlo statistics: moments, tail exponents, goodness of fit, domination."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats
from scipy.special import betainc

SIGNIFICANCE = 0.01


@dataclass(frozen=True)
class TailEstimate:
    kappa_hat: float
    k: int
    ci_low: float
    ci_high: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TestReport:
    name: str
    statistic: float
    p_value: float
    n: int
    passed: bool
    level: float = SIGNIFICANCE

    __test__ = False  # keep pytest from collecting this class

    def to_dict(self) -> dict:
        return asdict(self)


def mc_moment(samples, s: float):
    """Empirical mean of ``samples**s`` and the share of the largest single term.

    A share close to 1 means one draw dominates the sum, the usual signature of
    an infinite moment.
    """
    x = np.asarray(samples, dtype=float)
    if s < 0:
        raise ValueError("s must be nonnegative")
    if s == 0:
        return 1.0, 1.0 / x.size
    terms = x ** s
    total = terms.sum()
    return float(total / x.size), float(terms.max() / total)


def default_k(n: int) -> int:
    return int(math.floor(n ** 0.6))


def tail_exponent_hill(samples, k: int | None = None, level: float = 0.95) -> TailEstimate:
    """Hill estimator on the ``k`` largest values with a normal-approximation CI."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if np.any(~(x > 0)):
        raise ValueError("Hill estimator needs positive samples")
    k = default_k(n) if k is None else int(k)
    if k < 20 or k > n / 10:
        raise ValueError(f"need 20 <= k <= n/10, got k={k}, n={n}")
    # k + 1 largest values; the smallest of them is the threshold.
    top = np.sort(np.partition(x, n - k - 1)[n - k - 1:])
    gamma = np.log(top[1:]).mean() - math.log(top[0])
    if gamma <= 0:
        raise ValueError("the top order statistics are all equal: no power tail")
    kappa = 1.0 / gamma
    z = stats.norm.ppf(0.5 + level / 2)
    half = z * kappa / math.sqrt(k)
    return TailEstimate(kappa, k, kappa - half, kappa + half, n)


def hill_sweep(samples, ks=None) -> list[TailEstimate]:
    x = np.asarray(samples, dtype=float)
    n = x.size
    if ks is None:
        hi = n // 10
        ks = np.unique(np.geomspace(20, hi, num=25).astype(int)) if hi >= 20 else []
    return [tail_exponent_hill(x, int(k)) for k in ks]


def inverse_beta_cdf(t, a: float, b: float) -> np.ndarray:
    """CDF of ``1/W`` for ``W ~ Beta(a, b)``: ``P(1/W <= t) = P(W >= 1/t)``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    ok = t > 1
    out[ok] = betainc(b, a, 1.0 - 1.0 / t[ok])
    return out


def ks_test(samples, cdf, name: str = "ks", level: float = SIGNIFICANCE) -> TestReport:
    x = np.asarray(samples, dtype=float)
    res = stats.kstest(x, cdf, method="asymp" if x.size >= 100 else "exact")
    return TestReport(name, float(res.statistic), float(res.pvalue), x.size, bool(res.pvalue > level), level)


def ks_test_beta(samples, a: float, b: float, name: str = "ks-beta", level: float = SIGNIFICANCE) -> TestReport:
    return ks_test(samples, stats.beta(a, b).cdf, name, level)


def ks_test_inverse_beta(samples, params, name: str = "ks-inverse-beta", level: float = SIGNIFICANCE) -> TestReport:
    a, b = params.a, params.b
    return ks_test(samples, lambda t: inverse_beta_cdf(t, a, b), name, level)


def dominance_test(samples, cdf, name: str = "dkw-domination", level: float = SIGNIFICANCE) -> TestReport:
    """One-sided check that the sample is stochastically dominated by the law ``cdf``.

    Passes when the empirical survival function never exceeds the reference
    survival function by more than the one-sided DKW band
    ``sqrt(log(1/level) / (2n))``. The reported p-value is the DKW bound
    ``exp(-2 n D^2)`` on the observed excess ``D``.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    F = cdf(x)
    excess = float(np.max(F - np.arange(n) / n))
    excess = max(excess, 0.0)
    band = math.sqrt(math.log(1.0 / level) / (2 * n))
    p = min(1.0, math.exp(-2 * n * excess ** 2))
    return TestReport(name, excess, p, n, excess <= band, level)


def survival_loglog_fit(samples, quantile_range=(0.9, 0.999)):
    """Least-squares line through ``(log t, log P(X > t))`` over a quantile window.

    Returns ``(slope, intercept, r2)``; the slope estimates minus the tail index.
    """
    lo, hi = quantile_range
    if not (0.9 <= lo < hi <= 0.9999):
        raise ValueError("quantile range must lie within [0.9, 0.9999]")
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    surv = 1.0 - np.arange(1, n + 1) / n
    sel = (np.arange(1, n + 1) / n >= lo) & (np.arange(1, n + 1) / n <= hi) & (x > 0) & (surv > 0)
    if np.count_nonzero(sel) < 30:
        raise ValueError("fewer than 30 points in the quantile range")
    lx, ly = np.log(x[sel]), np.log(surv[sel])
    if np.ptp(lx) == 0:
        return 0.0, float(ly.mean()), 0.0
    fit = stats.linregress(lx, ly)
    return float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2)
