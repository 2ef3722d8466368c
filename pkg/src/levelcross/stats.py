"""Shared statistical helpers: regenerative ratio estimates, KS and chi-square tests.

Standard errors for quantities of the form (sum over cycles of Y) / (sum over
cycles of L) use the classical regenerative estimator: with R = sum(Y)/sum(L),

    se(R) = sqrt( sum((Y_i - R L_i)^2) / (n-1) ) / (sqrt(n) * mean(L)).

KS p-values use the asymptotic Kolmogorov distribution with the series
truncated at 100 terms; exact small-n tables are out of scope.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats as sps

__all__ = [
    "ratio_estimate",
    "block_estimate",
    "kolmogorov_sf",
    "ks_test",
    "chi2_test",
    "pool_bins",
    "KSReport",
    "Chi2Report",
]

_KS_TERMS = 100


@dataclass(frozen=True)
class KSReport:
    statistic: float
    pvalue: float
    n: int


@dataclass(frozen=True)
class Chi2Report:
    statistic: float
    pvalue: float
    df: int
    n_bins: int


def ratio_estimate(y: np.ndarray, lengths: np.ndarray) -> tuple[float, float]:
    """Regenerative ratio estimate of E[Y]/E[L] with its standard error.

    Parameters
    ----------
    y : array of per-cycle numerators.
    lengths : array of per-cycle denominators (cycle lengths or counts), > 0 on
        average.

    Returns
    -------
    (value, stderr)
    """
    y = np.asarray(y, dtype=float)
    lengths = np.asarray(lengths, dtype=float)
    if y.shape != lengths.shape or y.ndim != 1:
        raise ValueError("y and lengths must be 1-d arrays of equal length")
    n = y.size
    if n < 2:
        raise ValueError("need at least 2 cycles for a ratio estimate")
    total_l = lengths.sum()
    if total_l <= 0:
        raise ValueError("total cycle length must be positive")
    r = y.sum() / total_l
    resid = y - r * lengths
    se = np.sqrt((resid * resid).sum() / (n - 1)) / (np.sqrt(n) * lengths.mean())
    return float(r), float(se)


def block_estimate(values: np.ndarray, n_blocks: int = 100) -> tuple[float, float]:
    """Mean of `values` with a standard error from contiguous block means.

    Appropriate for serially correlated samples: blocks must be long compared
    with the correlation time for the error bar to be honest.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 2 * n_blocks:
        n_blocks = max(2, n // 2)
    edges = np.linspace(0, n, n_blocks + 1).astype(np.intp)
    sums = np.add.reduceat(values, edges[:-1])
    counts = np.diff(edges)
    means = sums / counts
    se = means.std(ddof=1) / np.sqrt(n_blocks)
    return float(values.mean()), float(se)


def kolmogorov_sf(x: float, terms: int = _KS_TERMS) -> float:
    """Survival function of the Kolmogorov distribution, P(K > x).

    Alternating series 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2), truncated at
    `terms` terms. For x <= 0 returns 1.
    """
    if x <= 0:
        return 1.0
    k = np.arange(1, terms + 1)
    s = 2.0 * np.sum((-1.0) ** (k - 1) * np.exp(-2.0 * k * k * x * x))
    return float(min(1.0, max(0.0, s)))


def ks_test(samples: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray]) -> KSReport:
    """One-sample KS test against a fully specified continuous cdf."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 1:
        raise ValueError("empty sample")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    d = float(max(d_plus, d_minus))
    return KSReport(d, kolmogorov_sf(np.sqrt(n) * d), n)


def pool_bins(
    observed: np.ndarray, expected: np.ndarray, min_expected: float = 5.0
) -> tuple[np.ndarray, np.ndarray]:
    """Merge adjacent bins from the right until every expected count >= min_expected.

    The leftmost bin absorbs whatever remains if the total is small.
    """
    obs = list(np.asarray(observed, dtype=float))
    exp = list(np.asarray(expected, dtype=float))
    if len(obs) != len(exp):
        raise ValueError("observed and expected must have equal length")
    i = len(exp) - 1
    while i > 0:
        if exp[i] < min_expected:
            exp[i - 1] += exp[i]
            obs[i - 1] += obs[i]
            del exp[i], obs[i]
        i -= 1
    # a deficient leftmost bin merges into its neighbour
    while len(exp) > 1 and exp[0] < min_expected:
        exp[1] += exp[0]
        obs[1] += obs[0]
        del exp[0], obs[0]
    return np.array(obs), np.array(exp)


def chi2_test(observed: np.ndarray, expected: np.ndarray, ddof: int = 0) -> Chi2Report:
    """Chi-square goodness of fit on pre-pooled bins.

    df = n_bins - 1 - ddof; raises if no degrees of freedom remain.
    """
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected, dtype=float)
    if np.any(expected <= 0):
        raise ValueError("expected counts must be positive; pool bins first")
    df = observed.size - 1 - ddof
    if df < 1:
        raise ValueError("not enough bins for a chi-square test")
    stat = float(np.sum((observed - expected) ** 2 / expected))
    return Chi2Report(stat, float(sps.chi2.sf(stat, df)), df, observed.size)
