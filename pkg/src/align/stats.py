"""Nonparametric statistics: Spearman, Mann-Whitney U, Cliff's delta, Kruskal-Wallis.

Conventions, fixed once for every analysis:
- Mann-Whitney reports U for the first sample (the phenomenon sample), with
  average ranks on ties, tie-corrected variance, and no continuity correction.
- Spearman p-values come from the t-approximation; an exact permutation
  p-value is available for small samples via method="exact".
- Kruskal-Wallis applies the standard tie correction and a chi-square tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.stats import chi2, norm, rankdata
from scipy.stats import t as t_dist


@dataclass(frozen=True)
class TestResult:
    """Statistic with its two-sided p-value and sample sizes."""

    statistic: float
    p_value: float
    n: tuple[int, ...]

    def __iter__(self):
        return iter((self.statistic, self.p_value))


def spearman(x: list[float], y: list[float], method: str = "approx") -> TestResult:
    """Spearman rank correlation with a two-sided p-value.

    method="approx" uses t = rho*sqrt((n-2)/(1-rho^2)) with n-2 degrees of
    freedom (p = 0 when |rho| = 1); method="exact" enumerates all rank
    permutations (n <= 9 only).
    """
    if len(x) != len(y):
        raise ValueError("samples must have equal length")
    n = len(x)
    if n < 3:
        raise ValueError("spearman needs at least 3 pairs")
    rx = rankdata(x)
    ry = rankdata(y)
    if np.all(rx == rx[0]) or np.all(ry == ry[0]):
        raise ValueError("constant input: rank correlation undefined")
    rho = float(np.corrcoef(rx, ry)[0, 1])
    rho = max(-1.0, min(1.0, rho))

    if method == "exact":
        if n > 9:
            raise ValueError("exact permutation p-value limited to n <= 9")
        hits = 0
        total = 0
        for perm in permutations(range(n)):
            r = float(np.corrcoef(rx, ry[list(perm)])[0, 1])
            hits += abs(r) >= abs(rho) - 1e-12
            total += 1
        return TestResult(statistic=rho, p_value=hits / total, n=(n,))
    if method != "approx":
        raise ValueError(f"unknown method {method!r}")

    if abs(rho) == 1.0:
        p = 0.0
    else:
        t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
        p = 2.0 * float(t_dist.sf(abs(t), n - 2))
    return TestResult(statistic=rho, p_value=p, n=(n,))


def mann_whitney_u(x: list[float], y: list[float]) -> TestResult:
    """Mann-Whitney U test reporting U for `x`, without continuity correction.

    U = R_x - n_x(n_x+1)/2 on pooled average ranks; the normal approximation
    uses the tie-corrected variance. When every pooled value is identical the
    variance vanishes and p is 1 by convention.
    """
    m, n = len(x), len(y)
    if m == 0 or n == 0:
        raise ValueError("mann_whitney_u needs non-empty samples")
    pooled = np.concatenate([np.asarray(x, dtype=float), np.asarray(y, dtype=float)])
    ranks = rankdata(pooled)
    r_x = float(np.sum(ranks[:m]))
    u = r_x - m * (m + 1) / 2.0

    big_n = m + n
    _, counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(counts**3 - counts))
    correction = 1.0 - tie_term / (big_n**3 - big_n) if big_n > 1 else 0.0
    sigma_sq = m * n * (big_n + 1) / 12.0 * correction
    if sigma_sq == 0.0:
        return TestResult(statistic=u, p_value=1.0, n=(m, n))
    z = (u - m * n / 2.0) / math.sqrt(sigma_sq)
    p = 2.0 * float(norm.sf(abs(z)))
    return TestResult(statistic=u, p_value=p, n=(m, n))


def cliffs_delta(x: list[float], y: list[float]) -> float:
    """Dominance effect size: (#{x_i > y_j} - #{x_i < y_j}) / (|x| * |y|)."""
    if len(x) == 0 or len(y) == 0:
        raise ValueError("cliffs_delta needs non-empty samples")
    xa = np.asarray(x, dtype=float)[:, None]
    ya = np.asarray(y, dtype=float)[None, :]
    greater = int(np.count_nonzero(xa > ya))
    less = int(np.count_nonzero(xa < ya))
    return (greater - less) / (len(x) * len(y))


def kruskal_wallis(groups: list[list[float]]) -> TestResult:
    """Kruskal-Wallis H test on pooled average ranks with tie correction.

    All observations identical makes the tie factor vanish; H is 0 by
    convention, giving p = 1 from the chi-square tail with k-1 df.
    """
    if len(groups) < 2:
        raise ValueError("kruskal_wallis needs at least 2 groups")
    sizes = [len(g) for g in groups]
    if any(s == 0 for s in sizes):
        raise ValueError("kruskal_wallis groups must be non-empty")
    big_n = sum(sizes)
    if big_n < 3:
        raise ValueError("kruskal_wallis needs at least 3 observations in total")

    pooled = np.concatenate([np.asarray(g, dtype=float) for g in groups])
    ranks = rankdata(pooled)
    h = 0.0
    start = 0
    for size in sizes:
        r_g = float(np.sum(ranks[start:start + size]))
        h += r_g * r_g / size
        start += size
    h = 12.0 / (big_n * (big_n + 1)) * h - 3.0 * (big_n + 1)

    _, counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(counts**3 - counts))
    correction = 1.0 - tie_term / (big_n**3 - big_n)
    if correction == 0.0:
        h = 0.0
    else:
        h /= correction
    h = max(h, 0.0)  # guard tiny negative rounding
    df = len(groups) - 1
    p = float(chi2.sf(h, df))
    return TestResult(statistic=h, p_value=p, n=tuple(sizes))


def interpret_delta(delta: float) -> str:
    """Magnitude label for Cliff's delta."""
    size = abs(delta)
    if size < 0.147:
        return "negligible"
    if size < 0.33:
        return "small"
    if size < 0.474:
        return "medium"
    return "large"


def interpret_rho(rho: float) -> str:
    """Magnitude label for a rank correlation coefficient."""
    size = abs(rho)
    if size < 0.20:
        return "very weak"
    if size < 0.40:
        return "weak"
    if size < 0.60:
        return "moderate"
    if size < 0.80:
        return "strong"
    return "very strong"
