"""Kolmogorov-Smirnov tests, summary moments and plot-ready tables."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

__all__ = [
    "KSResult",
    "SummaryStats",
    "kolmogorov_sf",
    "ks_one_sample",
    "ks_two_sample",
    "summary",
    "ecdf_table",
    "histogram",
    "REFERENCE_CDFS",
]

REFERENCE_CDFS = {"std-normal": ndtr}
KOLMOGOROV_TERMS = 100


@dataclass(frozen=True)
class KSResult:
    D: float
    p_approx: float
    N: int
    M: int | None = None

    def to_dict(self) -> dict:
        out = {"D": self.D, "p_approx": self.p_approx, "N": self.N}
        if self.M is not None:
            out["M"] = self.M
        return out


def kolmogorov_sf(lam: float) -> float:
    """``P(K > lam) = 2 sum_{k>=1} (-1)**(k-1) exp(-2 k**2 lam**2)``.

    The series is truncated at 100 terms.  It converges too slowly to be
    useful below ``lam = 0.2``, where the true value exceeds ``1 - 1e-15``,
    so 1 is returned there.
    """
    if lam < 0.2:
        return 1.0
    k = np.arange(1, KOLMOGOROV_TERMS + 1, dtype=float)
    terms = np.where(k % 2 == 1, 1.0, -1.0) * np.exp(-2.0 * k * k * lam * lam)
    return float(min(1.0, max(0.0, 2.0 * math.fsum(terms))))


def _clean(x, minimum: int, what: str = "x") -> np.ndarray:
    arr = np.array(x, dtype=float).ravel()
    if arr.size < minimum:
        raise ValueError(f"{what} needs at least {minimum} samples, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite samples")
    return arr


def ks_one_sample(x, cdf="std-normal") -> KSResult:
    """One-sample KS test against a reference CDF (an id or a callable)."""
    arr = np.sort(_clean(x, 5))
    F = REFERENCE_CDFS[cdf] if isinstance(cdf, str) else cdf
    N = arr.size
    Fx = np.asarray(F(arr), dtype=float)
    i = np.arange(1, N + 1)
    D = float(max(np.max(np.abs(i / N - Fx)), np.max(np.abs((i - 1) / N - Fx))))
    return KSResult(D, kolmogorov_sf(math.sqrt(N) * D), N)


def ks_two_sample(x, y) -> KSResult:
    """Two-sample KS test; the p-value uses the effective size ``N M / (N + M)``."""
    a = np.sort(_clean(x, 5, "x"))
    b = np.sort(_clean(y, 5, "y"))
    N, M = a.size, b.size
    pts = np.concatenate([a, b])
    Fa = np.searchsorted(a, pts, side="right") / N
    Fb = np.searchsorted(b, pts, side="right") / M
    D = float(np.max(np.abs(Fa - Fb)))
    return KSResult(D, kolmogorov_sf(math.sqrt(N * M / (N + M)) * D), N, M)


@dataclass(frozen=True)
class SummaryStats:
    """Sample moments with large-sample standard errors.

    The skewness and excess-kurtosis errors are the normal-theory values
    ``sqrt(6/N)`` and ``sqrt(24/N)``.
    """

    N: int
    mean: float
    mean_stderr: float
    variance: float
    variance_stderr: float
    skewness: float
    skewness_stderr: float
    excess_kurtosis: float
    excess_kurtosis_stderr: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def summary(x) -> SummaryStats:
    arr = _clean(x, 2)
    N = arr.size
    mean = math.fsum(arr) / N
    dev = arr - mean
    m2 = math.fsum(dev**2) / N
    m3 = math.fsum(dev**3) / N
    m4 = math.fsum(dev**4) / N
    var = m2 * N / (N - 1)
    skew = m3 / m2**1.5 if m2 > 0 else 0.0
    kurt = m4 / m2**2 - 3.0 if m2 > 0 else 0.0
    # Var(s^2) ~ (mu4 - (N-3)/(N-1) sigma^4) / N
    var_se = math.sqrt(max(0.0, m4 - (N - 3) / (N - 1) * var * var) / N)
    return SummaryStats(
        N=N,
        mean=mean,
        mean_stderr=math.sqrt(var / N),
        variance=var,
        variance_stderr=var_se,
        skewness=skew,
        skewness_stderr=math.sqrt(6.0 / N),
        excess_kurtosis=kurt,
        excess_kurtosis_stderr=math.sqrt(24.0 / N),
    )


def ecdf_table(x, grid) -> list[dict]:
    """Rows ``{"x": g, "ecdf": #{x_i <= g} / N}`` for each grid point."""
    arr = np.sort(np.array(x, dtype=float).ravel())
    if arr.size == 0:
        raise ValueError("empty input")
    g = np.asarray(grid, dtype=float).ravel()
    F = np.searchsorted(arr, g, side="right") / arr.size
    return [{"x": float(a), "ecdf": float(b)} for a, b in zip(g, F)]


def histogram(x, bins=20) -> list[dict]:
    """Rows ``{"lo", "hi", "count"}``; non-finite samples are dropped."""
    arr = np.array(x, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("empty input")
    arr = arr[np.isfinite(arr)]
    counts, edges = np.histogram(np.sort(arr), bins=bins)
    return [
        {"lo": float(edges[i]), "hi": float(edges[i + 1]), "count": int(counts[i])}
        for i in range(counts.size)
    ]
