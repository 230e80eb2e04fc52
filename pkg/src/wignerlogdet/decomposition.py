"""Martingale and phase diagnostics for the determinant pair recursion.

Conditionally on the previous direction ``(cos t, sin t)`` of the pair
``(E_{2j-2}, E_{2j-3})``, the increment

    h_j = -c_{2j-1} cos(t)**2 - c_{2j-2} sin(t)**2 + (a_{2j-1} - a_{2j}) cos(t) sin(t)

is a quadratic form in fresh independent entries, so its conditional mean
is 0 and its conditional second moment is ``var_c (cos**4 + sin**4) +
2 var_a cos**2 sin**2``, i.e. exactly 1 for the GUE model and 2 for GOE.
To first order ``log F_j - log F_{j-1} = -sqrt(2/j) h_j + O(1/j)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "h_value",
    "h_from_direction",
    "h_conditional_moments",
    "telescoping_check",
    "MartingaleReport",
    "martingale_report",
    "WeylEstimate",
    "weyl_sum",
    "s_n_squared",
]


def h_from_direction(u0, u1, a_2j, a_2jm1, c_2jm1, c_2jm2):
    """``h_j`` from the unit direction ``(u0, u1)`` of ``(E_{2j-2}, E_{2j-3})``.

    Works elementwise on arrays and also on exact scalars (``Fraction``).
    """
    return -c_2jm1 * u0 * u0 - c_2jm2 * u1 * u1 + (a_2jm1 - a_2j) * u0 * u1


def h_value(theta_prev, a_2j, a_2jm1, c_2jm1, c_2jm2):
    """Martingale increment ``h_j`` evaluated at the previous angle ``theta_{j-1}``.

    The sign ``(-1)**(j-1)`` of the polar representation cancels in every
    term, so the angle alone determines the weights.
    """
    return h_from_direction(np.cos(theta_prev), np.sin(theta_prev), a_2j, a_2jm1, c_2jm1, c_2jm2)


def h_conditional_moments(cos_t, sin_t, var_a=1, var_c=1):
    """Exact conditional ``(E h, E h**2)`` at a fixed direction.

    Entries are independent and centred with variances ``var_a`` (the two
    ``a``'s) and ``var_c`` (the two ``c``'s).  Pass ``Fraction`` arguments
    for exact arithmetic.
    """
    c2 = cos_t * cos_t
    s2 = sin_t * sin_t
    second = var_c * (c2 * c2 + s2 * s2) + 2 * var_a * c2 * s2
    return 0 * second, second


def telescoping_check(trace) -> np.ndarray:
    """Residual of ``log F_{n/2} = log F_m + sum_j (log F_j - log F_{j-1})``.

    Increments are summed with ``math.fsum``; one residual per trace.
    """
    logF = np.asarray(trace.logF)
    inc = np.diff(logF, axis=-1)
    flat_inc = inc.reshape(-1, inc.shape[-1])
    total = np.array([math.fsum(row) for row in flat_inc]).reshape(inc.shape[:-1])
    return np.abs(logF[..., -1] - logF[..., 0] - total)


def s_n_squared(n: int, m: int, beta: int = 2) -> float:
    """``sum_{j=m+1}^{n/2} (2/beta) / j``, the variance scale of ``sum_j h_j / sqrt(j)``."""
    j = np.arange(m + 1, n // 2 + 1, dtype=float)
    return (2.0 / beta) * math.fsum(1.0 / j)


@dataclass(frozen=True)
class MartingaleReport:
    """Pooled moment estimates of ``h_j`` over replicates.

    ``mean[k]``, ``second[k]`` and their standard errors refer to
    ``j = j_values[k]``.  The pooled fields average over every ``(j, replicate)``.
    """

    n: int
    m: int
    replicates: int
    j_values: np.ndarray
    mean: np.ndarray
    mean_stderr: np.ndarray
    second: np.ndarray
    second_stderr: np.ndarray
    pooled_mean: float
    pooled_mean_stderr: float
    pooled_second: float
    pooled_second_stderr: float
    epsilon: float
    s_n2: float
    lindeberg: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "replicates": self.replicates,
            "pooled_mean": self.pooled_mean,
            "pooled_mean_stderr": self.pooled_mean_stderr,
            "pooled_second": self.pooled_second,
            "pooled_second_stderr": self.pooled_second_stderr,
            "epsilon": self.epsilon,
            "s_n2": self.s_n2,
            "lindeberg": self.lindeberg,
        }


def martingale_report(traces, epsilon: float = 0.1) -> MartingaleReport:
    """Pool ``h_j`` over replicates.

    ``traces`` is either a batched :class:`~wignerlogdet.tridiag.DeterminantTrace`
    or a sequence of unbatched ones sharing ``(n, m)``.  The Lindeberg proxy
    is ``sum_j mean(T_j**2 1{|T_j| >= eps s_n}) / s_n**2`` with
    ``T_j = h_j / sqrt(j)`` and ``s_n**2 = sum_j mean(T_j**2)``.
    """
    if isinstance(traces, (list, tuple)):
        if not traces:
            raise ValueError("need at least two traces")
        n, m = traces[0].n, traces[0].m
        if any(t.n != n or t.m != m for t in traces):
            raise ValueError("traces must share n and m")
        H = np.stack([np.asarray(t.h) for t in traces])
    else:
        n, m = traces.n, traces.m
        H = np.asarray(traces.h)
        H = H.reshape(-1, H.shape[-1])
    R = H.shape[0]
    if R < 2:
        raise ValueError("need at least two traces")
    j = np.arange(m + 1, n // 2 + 1)

    mean = H.mean(axis=0)
    mean_se = H.std(axis=0, ddof=1) / math.sqrt(R)
    sq = H**2
    second = sq.mean(axis=0)
    second_se = sq.std(axis=0, ddof=1) / math.sqrt(R)

    flat = H.ravel()
    N = flat.size
    pooled_mean = float(flat.mean())
    pooled_mean_se = float(flat.std(ddof=1) / math.sqrt(N))
    pooled_second = float(sq.mean())
    pooled_second_se = float(sq.std(ddof=1) / math.sqrt(N))

    T2 = sq / j
    s_n2 = float(T2.mean(axis=0).sum())
    thresh = epsilon * math.sqrt(s_n2)
    tail = np.where(np.sqrt(T2) >= thresh, T2, 0.0)
    lindeberg = float(tail.mean(axis=0).sum() / s_n2)

    return MartingaleReport(
        n=n, m=m, replicates=R, j_values=j,
        mean=mean, mean_stderr=mean_se, second=second, second_stderr=second_se,
        pooled_mean=pooled_mean, pooled_mean_stderr=pooled_mean_se,
        pooled_second=pooled_second, pooled_second_stderr=pooled_second_se,
        epsilon=epsilon, s_n2=s_n2, lindeberg=lindeberg,
    )


@dataclass(frozen=True)
class WeylEstimate:
    k: int
    mean: complex
    stderr: float
    N: int

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "mean_re": self.mean.real,
            "mean_im": self.mean.imag,
            "abs_mean": abs(self.mean),
            "stderr": self.stderr,
            "N": self.N,
        }


def weyl_sum(thetas, k: int) -> WeylEstimate:
    """Sample mean of ``exp(i k theta)``.

    ``stderr`` combines the two component standard deviations,
    ``sqrt(var(cos) + var(sin)) / sqrt(N)``.
    """
    if k == 0:
        raise ValueError("k must be nonzero")
    th = np.asarray(thetas, dtype=float).ravel()
    N = th.size
    if N < 2:
        raise ValueError("need at least two angles")
    cs, sn = np.cos(k * th), np.sin(k * th)
    mean = complex(cs.mean(), sn.mean())
    se = math.sqrt(cs.var(ddof=1) + sn.var(ddof=1)) / math.sqrt(N)
    return WeylEstimate(int(k), mean, se, N)
