"""Distribution functions and three classical hypothesis tests.

The regularized incomplete beta/gamma functions underneath the CDFs come
from ``scipy.special`` (Cephes). The tests compare them against an mpmath
reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .core import DegenerateError, DomainError


@dataclass(frozen=True)
class StatTestResult:
    statistic: float
    dof: float | tuple[float, float]
    p_value: float
    critical_value: float
    reject_null: bool
    alpha: float


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    return alpha


def _check_dof(*dofs: float) -> None:
    for d in dofs:
        if not (np.isfinite(d) and d > 0):
            raise DomainError(f"degrees of freedom must be > 0, got {d}")


def normal_cdf(z: float) -> float:
    """Standard normal CDF via the complementary error function."""
    z = float(z)
    if not np.isfinite(z):
        raise DomainError("z must be finite")
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def f_cdf(x: float, df1: float, df2: float) -> float:
    _check_dof(df1, df2)
    if x <= 0:
        return 0.0
    return float(special.fdtr(df1, df2, x))


def f_sf(x: float, df1: float, df2: float) -> float:
    _check_dof(df1, df2)
    if x <= 0:
        return 1.0
    return float(special.fdtrc(df1, df2, x))


def f_ppf(q: float, df1: float, df2: float) -> float:
    _check_dof(df1, df2)
    return float(special.fdtri(df1, df2, q))


def t_cdf(x: float, df: float) -> float:
    _check_dof(df)
    return float(special.stdtr(df, x))


def t_ppf(q: float, df: float) -> float:
    _check_dof(df)
    return float(special.stdtrit(df, q))


def chi2_tail(x: float, df: float) -> float:
    """P(chi2_df > x)."""
    _check_dof(df)
    if x <= 0:
        return 1.0
    return float(special.chdtrc(df, x))


def f_test_variance_ratio(
    var1: float, var2: float, n1: int, n2: int, alpha: float = 0.05
) -> StatTestResult:
    """F = var1/var2 against F(n1-1, n2-1).

    The p-value is the upper tail. The critical value is the 1 - alpha/2
    quantile and the null of equal variances is rejected when F exceeds it.
    """
    alpha = _check_alpha(alpha)
    if not (var1 > 0 and var2 > 0):
        raise DomainError("variances must be > 0")
    if n1 < 2 or n2 < 2:
        raise DomainError("need at least 2 observations per sample")
    d1, d2 = float(n1 - 1), float(n2 - 1)
    stat = float(var1) / float(var2)
    crit = f_ppf(1.0 - alpha / 2.0, d1, d2)
    return StatTestResult(stat, (d1, d2), f_sf(stat, d1, d2), crit, bool(stat > crit), alpha)


def welch_dof(var1: float, n1: int, var2: float, n2: int) -> float:
    a, b = var1 / n1, var2 / n2
    return (a + b) ** 2 / (a * a / (n1 - 1) + b * b / (n2 - 1))


def welch_t_test(
    mean1: float,
    var1: float,
    n1: int,
    mean2: float,
    var2: float,
    n2: int,
    alpha: float = 0.05,
) -> StatTestResult:
    """Two-sided Welch test on |mean1 - mean2| / sqrt(var1/n1 + var2/n2)."""
    alpha = _check_alpha(alpha)
    if n1 < 2 or n2 < 2:
        raise DomainError("need at least 2 observations per sample")
    if var1 < 0 or var2 < 0:
        raise DomainError("variances must be >= 0")
    if var1 == 0 and var2 == 0:
        raise DegenerateError("both variances are zero")
    se = math.sqrt(var1 / n1 + var2 / n2)
    stat = abs(float(mean1) - float(mean2)) / se
    dof = welch_dof(var1, n1, var2, n2)
    p = min(1.0, 2.0 * float(special.stdtr(dof, -stat)))
    crit = t_ppf(1.0 - alpha / 2.0, dof)
    return StatTestResult(stat, dof, p, crit, bool(stat > crit), alpha)


def two_proportion_z_one_sided(
    p_hat2: float, p_hat1: float, n: int, alpha: float = 0.05, n1: int | None = None
) -> StatTestResult:
    """Pooled two-proportion z test of H0: p2 >= p1 against H1: p2 < p1.

    ``n`` is the size of sample 2 and also of sample 1 unless ``n1`` is given.
    The p-value is Phi(z) and the critical value is the alpha quantile of
    the standard normal (rejection when z < critical).
    """
    alpha = _check_alpha(alpha)
    n2 = int(n)
    n1 = n2 if n1 is None else int(n1)
    if n1 < 1 or n2 < 1:
        raise DomainError("sample sizes must be >= 1")
    for p in (p_hat1, p_hat2):
        if not 0.0 <= p <= 1.0:
            raise DomainError("proportions must lie in [0, 1]")
    pooled = (p_hat1 * n1 + p_hat2 * n2) / (n1 + n2)
    if pooled <= 0.0 or pooled >= 1.0:
        raise DegenerateError("pooled proportion is 0 or 1")
    se = math.sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2))
    z = (p_hat2 - p_hat1) / se
    crit = float(special.ndtri(alpha))
    return StatTestResult(z, math.inf, normal_cdf(z), crit, bool(z < crit), alpha)
