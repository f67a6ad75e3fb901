"""Normality testing and correlation reports for synthetic populations.

The Shapiro-Wilk W statistic and its p-value follow Royston's AS R94
polynomial approximation, valid for sample sizes 3..5000.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import DataError, DegenerateGeometryError

_NORMAL = NormalDist()

# Royston 1995 polynomial coefficients (ascending powers applied to 1/sqrt(n))
_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
# p-value location/scale polynomials
_C3 = (0.5440, -0.39978, 0.025054, -6.714e-4)      # mu, 4 <= n <= 11 (poly in n)
_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)      # log sigma, 4 <= n <= 11
_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)     # mu, n >= 12 (poly in log n)
_C6 = (-0.4803, -0.082676, 0.0030302)               # log sigma, n >= 12
_G = (-2.273, 0.459)                                # gamma, 4 <= n <= 11


def _poly(coefs, x: float) -> float:
    return sum(c * x**i for i, c in enumerate(coefs))


@dataclass(frozen=True)
class ShapiroWilkResult:
    statistic: float
    pvalue: float


def shapiro_wilk(samples) -> ShapiroWilkResult:
    """Shapiro-Wilk test of normality (Royston AS R94 approximation)."""
    x = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    n = x.size
    if n < 3 or n > 5000:
        raise DataError(f"Shapiro-Wilk requires 3 <= n <= 5000, got {n}")
    if x[-1] - x[0] < 1e-12 * max(abs(x[0]), abs(x[-1]), 1.0):
        raise DegenerateGeometryError("constant sample; Shapiro-Wilk undefined")

    # expected normal order statistics (Blom approximation)
    m = np.array([_NORMAL.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)])
    mm = float(m @ m)
    rsn = 1.0 / math.sqrt(n)
    a = np.empty(n)
    if n == 3:
        a[0] = -math.sqrt(0.5)
        a[1] = 0.0
        a[2] = math.sqrt(0.5)
    else:
        c = m / math.sqrt(mm)
        a_n = c[-1] + _poly(_C1, rsn)
        if n <= 5:
            phi = (mm - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * a_n**2)
            a[1:-1] = m[1:-1] / math.sqrt(phi)
            a[-1] = a_n
            a[0] = -a_n
        else:
            a_n1 = c[-2] + _poly(_C2, rsn)
            phi = (mm - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2) / (
                1.0 - 2.0 * a_n**2 - 2.0 * a_n1**2
            )
            a[2:-2] = m[2:-2] / math.sqrt(phi)
            a[-1] = a_n
            a[-2] = a_n1
            a[0] = -a_n
            a[1] = -a_n1

    xm = x - x.mean()
    ssq = float(xm @ xm)
    if ssq <= 0.0:
        raise DegenerateGeometryError("zero variance sample; Shapiro-Wilk undefined")
    w = float(a @ x) ** 2 / ssq
    w = min(w, 1.0)

    if n == 3:
        p = (6.0 / math.pi) * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        p = min(max(p, 0.0), 1.0)
        return ShapiroWilkResult(w, p)
    if n <= 11:
        gamma = _poly(_G, float(n))
        if gamma - math.log(1.0 - w) <= 0.0:
            return ShapiroWilkResult(w, 0.0)
        y = -math.log(gamma - math.log(1.0 - w))
        mu = _poly(_C3, float(n))
        sigma = math.exp(_poly(_C4, float(n)))
    else:
        y = math.log(1.0 - w)
        ln_n = math.log(float(n))
        mu = _poly(_C5, ln_n)
        sigma = math.exp(_poly(_C6, ln_n))
    z = (y - mu) / sigma
    p = 0.5 * math.erfc(z / math.sqrt(2.0))  # upper normal tail without underflow
    return ShapiroWilkResult(w, p)


@dataclass(frozen=True)
class NormalityReport:
    """Per-label Shapiro-Wilk outcome at the 0.01 significance level."""

    labels: tuple[str, ...]
    statistics: np.ndarray
    pvalues: np.ndarray
    alpha: float = 0.01

    @property
    def passed(self) -> np.ndarray:
        return self.pvalues > self.alpha


def normality_report(labels, columns: np.ndarray, alpha: float = 0.01) -> NormalityReport:
    stats = []
    ps = []
    for j in range(columns.shape[1]):
        r = shapiro_wilk(columns[:, j])
        stats.append(r.statistic)
        ps.append(r.pvalue)
    return NormalityReport(tuple(labels), np.array(stats), np.array(ps), alpha)


def pearson_matrix(a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """Sample Pearson correlations between columns of a (and b)."""
    a = np.asarray(a, dtype=float)
    if a.shape[0] < 3:
        raise DataError("Pearson correlation needs at least 3 samples")

    def _standardize(x):
        sd = x.std(axis=0, ddof=1)
        if np.any(sd <= 0):
            bad = int(np.argmin(sd))
            raise DegenerateGeometryError(f"zero-variance column {bad} in correlation input")
        return (x - x.mean(axis=0)) / sd

    az = _standardize(a)
    bz = az if b is None else _standardize(np.asarray(b, dtype=float))
    return (az.T @ bz) / (a.shape[0] - 1)
