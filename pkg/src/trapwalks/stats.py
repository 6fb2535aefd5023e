"""Statistical estimators for the verification harness: tail-index fits,
two-sample Kolmogorov-Smirnov, Laplace comparisons, exponent regressions."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import kolmogorov


@dataclass(frozen=True)
class TailFit:
    gamma_hill: float
    c_hill: float
    stderr: float
    gamma_regression: float
    c_regression: float
    heavy: bool


def hill_estimator(samples, k):
    """Hill estimate of the tail index gamma (P[X > u] ~ c u^-gamma) from the
    top k order statistics, with the matching threshold constant."""
    x = np.sort(np.asarray(samples, dtype=np.float64))[::-1]
    if k >= x.size or k < 2:
        raise ValueError("need 2 <= k < len(samples)")
    threshold = x[k]
    if threshold <= 0:
        raise ValueError("tail threshold must be positive")
    logs = np.log(x[:k]) - math.log(threshold)
    inv_gamma = logs.mean()
    gamma = 1.0 / inv_gamma
    c = (k / x.size) * threshold**gamma
    return gamma, c, gamma / math.sqrt(k)


def tail_index_fit(samples, k=None) -> TailFit:
    """Hill estimator plus a log-log survival regression on the same tail.

    The heavy flag is cleared when the two routes disagree grossly or the
    estimate leaves the heavy-tail range gamma < 2 (light-tailed data make
    the Hill plot drift with k instead of stabilizing).
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 10**4:
        raise ValueError("tail fit needs at least 10^4 samples")
    if k is None:
        k = max(int(x.size ** 0.6), 100)
    g_hill, c_hill, se = hill_estimator(x, k)
    g_half, _, _ = hill_estimator(x, k // 2)
    xs = np.sort(x)[::-1]
    # survival points at the top-k order statistics, thinned on a log grid
    idx = np.unique(np.geomspace(1, k, num=40).astype(np.int64))
    u = xs[idx]
    surv = (idx + 1) / x.size
    good = u > 0
    slope, intercept = np.polyfit(np.log(u[good]), np.log(surv[good]), 1)
    g_reg = -float(slope)
    c_reg = float(math.exp(intercept))
    heavy = (
        g_hill < 2.0
        and g_reg < 3.0
        and abs(g_hill - g_half) < 0.5 * g_hill
        and abs(g_hill - g_reg) < 0.75 * max(g_hill, g_reg)
    )
    return TailFit(g_hill, c_hill, se, g_reg, c_reg, heavy)


def ks_statistic(a, b):
    """Two-sample Kolmogorov-Smirnov distance."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("samples must be nonempty")
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.abs(fa - fb).max())


def ks_two_sample(a, b, rng=None, permutations=10000):
    """KS distance and p-value.

    Small samples (min size < 100) get a seeded permutation null; larger
    ones the asymptotic Kolmogorov law.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d = ks_statistic(a, b)
    n1, n2 = a.size, b.size
    if min(n1, n2) < 100:
        if rng is None:
            rng = np.random.default_rng(0)
        pooled = np.concatenate([a, b])
        hits = 0
        for _ in range(permutations):
            perm = rng.permutation(pooled)
            if ks_statistic(perm[:n1], perm[n1:]) >= d - 1e-15:
                hits += 1
        return d, (hits + 1) / (permutations + 1)
    n_eff = n1 * n2 / (n1 + n2)
    return d, float(kolmogorov(d * math.sqrt(n_eff)))


def ks_against_cdf(samples, cdf):
    """One-sample KS distance against an explicit distribution function."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    f = cdf(x)
    upper = np.abs(np.arange(1, n + 1) / n - f).max()
    lower = np.abs(f - np.arange(0, n) / n).max()
    return float(max(upper, lower))


def displacement_exponent(running_max, t_grid):
    """Log-log slope of the median running maximum over the time grid.

    running_max: (replicates, len(t_grid)) array.  Requires at least three
    decades of time; returns (slope, stderr) from the OLS fit.
    """
    t = np.asarray(t_grid, dtype=np.float64)
    if t.size < 3 or t[-1] / t[0] < 10.0**3:
        raise ValueError("time grid must span at least three decades")
    med = np.median(np.asarray(running_max, dtype=np.float64), axis=0)
    if np.any(med <= 0):
        raise ValueError("median running max must be positive on the grid")
    x = np.log(t)
    y = np.log(med)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    dof = max(x.size - 2, 1)
    var = resid @ resid / dof / ((x - x.mean()) @ (x - x.mean()))
    return float(slope), float(math.sqrt(var))


def empirical_laplace(samples, lam):
    """Monte Carlo E[exp(-lam X)] with its standard error."""
    x = np.asarray(samples, dtype=np.float64)
    values = np.exp(-lam * x)
    se = values.std(ddof=1) / math.sqrt(x.size) if x.size > 1 else 0.0
    return float(values.mean()), float(se)


def batch_means_se(samples, n_batches=30):
    """Standard error of the mean by batch means (guards correlated streams)."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size < n_batches:
        raise ValueError("not enough samples for the requested batches")
    usable = (x.size // n_batches) * n_batches
    means = x[:usable].reshape(n_batches, -1).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


def log_spaced_steps(t_min, t_max, per_decade=8):
    """Integer step grid, log-spaced, deduplicated."""
    n = int(round(math.log10(t_max / t_min) * per_decade)) + 1
    grid = np.unique(np.round(np.geomspace(t_min, t_max, num=max(n, 2))).astype(np.int64))
    return grid
