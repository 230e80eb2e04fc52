"""Trotter tridiagonal models and overflow-free determinant recursions.

A :class:`TridiagonalModel` stores the diagonal ``a_1..a_n`` and the
nonnegative off-diagonal ``b_1..b_{n-1}`` of a real symmetric tridiagonal
matrix.  Arrays may carry leading batch dimensions, ``a.shape == (..., n)``,
in which case every routine here works replicate-wise and vectorizes over
the batch; the recursions themselves run over the matrix index.

Leading principal minors obey ``D_i = a_i D_{i-1} - b_{i-1}**2 D_{i-2}``.
The normalized minors ``E_i = D_i / sqrt(i!)`` are advanced two at a time
as the pair ``(E_{2j}, E_{2j-1})``, stored as a unit direction plus an
accumulated log-norm, so nothing overflows even for ``n ~ 2**20``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .ensembles import as_generator

__all__ = [
    "TridiagonalModel",
    "DeterminantTrace",
    "DegenerateTraceError",
    "sample_tridiagonal",
    "householder_tridiagonalize",
    "det_recursion_exact",
    "logdet_trace",
    "c_sequence",
    "default_m",
    "write_model_csv",
    "write_trace_csv",
]


class DegenerateTraceError(ArithmeticError):
    """The pair ``(E_{2j}, E_{2j-1})`` vanished (a probability-zero event)."""


@dataclass(frozen=True, eq=False)
class TridiagonalModel:
    a: np.ndarray
    b: np.ndarray
    beta: int | None = None

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.ndim == 0 or a.shape[-1] < 1:
            raise ValueError("need at least one diagonal entry")
        if b.shape != a.shape[:-1] + (a.shape[-1] - 1,):
            raise ValueError("b must have one entry fewer than a along the last axis")
        if np.any(b < 0):
            raise ValueError("off-diagonal entries must be nonnegative")
        if self.beta not in (None, 1, 2):
            raise ValueError("beta must be 1 or 2")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.a.shape[-1]

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.a.shape[:-1]

    def __getitem__(self, idx) -> "TridiagonalModel":
        """Select replicates from a batched model."""
        return TridiagonalModel(self.a[idx], self.b[idx], self.beta)

    def to_dense(self) -> np.ndarray:
        if self.batch_shape:
            raise ValueError("to_dense needs an unbatched model")
        return np.diag(self.a) + np.diag(self.b, 1) + np.diag(self.b, -1)


def sample_tridiagonal(n: int, beta: int, rng=None, size=None) -> TridiagonalModel:
    """Sample the Trotter model sharing the GUE (``beta=2``) or GOE (``beta=1``) spectrum.

    ``a_i ~ N(0, 2/beta)`` and ``b_i**2 ~ Gamma(shape=beta*i/2, scale=2/beta)``,
    so ``b_i**2`` is complex chi-square (mean ``i``, variance ``i``) for
    ``beta=2`` and real chi-square ``chi2_i`` for ``beta=1``.  The diagonal
    is drawn first, then the off-diagonal.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if beta not in (1, 2):
        raise ValueError("beta must be 1 or 2")
    rng = as_generator(rng)
    shape = () if size is None else (size,) if np.isscalar(size) else tuple(size)
    a = rng.normal(0.0, math.sqrt(2.0 / beta), size=shape + (n,))
    k = np.broadcast_to(beta * np.arange(1, n) / 2.0, shape + (n - 1,))
    b2 = rng.standard_gamma(k) * (2.0 / beta)
    return TridiagonalModel(a, np.sqrt(b2), beta)


def householder_tridiagonalize(H: np.ndarray) -> TridiagonalModel:
    """Unitarily reduce a Hermitian matrix to real tridiagonal form.

    Works from the last column backwards: step ``k`` conjugates the leading
    ``k x k`` block by a unitary (a Householder reflection followed by a
    diagonal phase) that maps the part of column ``k+1`` above the diagonal
    onto ``b_k e_k`` with ``b_k >= 0`` and leaves trailing basis vectors
    fixed.  The returned model carries no ``beta`` tag.
    """
    A = np.array(H, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("H must be square")
    n = A.shape[0]
    b = np.zeros(max(n - 1, 0))
    for k in range(n - 1, 0, -1):
        x = A[:k, k].copy()
        alpha = np.linalg.norm(x)
        b[k - 1] = alpha
        if alpha == 0.0:
            continue
        last = x[-1]
        phase = last / abs(last) if last != 0 else 1.0
        v = x
        v[-1] += phase * alpha
        w = v / np.linalg.norm(v)
        B = A[:k, :k]
        B -= 2.0 * np.outer(w, w.conj() @ B)
        B -= 2.0 * np.outer(B @ w, w.conj())
        d = -np.conj(phase)
        B[-1, :] *= d
        B[:, -1] *= np.conj(d)
        A[:k, k] = 0.0
        A[k, :k] = 0.0
        A[k - 1, k] = A[k, k - 1] = alpha
    return TridiagonalModel(np.real(np.diag(A)).copy(), b, None)


def _step_major(x: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.moveaxis(x, -1, 0))


def det_recursion_exact(T: TridiagonalModel) -> tuple[np.ndarray, np.ndarray]:
    """``log|D_i|`` and ``sign(D_i)`` for ``i = 1..n`` from the cofactor recursion.

    The two most recent minors are rescaled by their common maximum after
    every step and the log of the scale is accumulated.  A vanishing minor
    gives ``(-inf, 0)``.

    Returns
    -------
    log_abs, sign : ndarray, shape ``(..., n)``
    """
    a = _step_major(T.a)
    b2 = _step_major(T.b**2)
    n = T.n
    batch = T.batch_shape
    log_abs = np.empty((n,) + batch)
    sign = np.empty((n,) + batch)
    prev = np.ones(batch)
    cur = a[0].copy()
    scale = np.zeros(batch)
    with np.errstate(divide="ignore"):
        log_abs[0] = np.log(np.abs(cur))
        sign[0] = np.sign(cur)
        for i in range(1, n):
            new = a[i] * cur - b2[i - 1] * prev
            s = np.maximum(np.abs(new), np.abs(cur))
            s = np.where(s > 0, s, 1.0)
            prev = cur / s
            cur = new / s
            scale = scale + np.log(s)
            log_abs[i] = scale + np.log(np.abs(cur))
            sign[i] = np.sign(cur)
    return np.moveaxis(log_abs, 0, -1), np.moveaxis(sign, 0, -1)


def c_sequence(T: TridiagonalModel) -> np.ndarray:
    """Centred, scaled off-diagonal squares ``c_i = (b_i**2 - i) / sqrt(i)``."""
    i = np.arange(1, T.n, dtype=float)
    return (T.b**2 - i) / np.sqrt(i)


def default_m(n: int) -> int:
    """``floor(log log log n)``, at least 1 (and at most ``n/2``)."""
    m = 1
    if n > math.e**math.e:
        m = int(math.floor(math.log(math.log(math.log(n)))))
    return max(1, min(m, n // 2))


@dataclass(frozen=True, eq=False)
class DeterminantTrace:
    """Pair recursion record for ``j = m..n/2``.

    ``logF[..., j-m]`` is ``log F_j`` with ``F_j = E_{2j}**2 + E_{2j-1}**2``;
    ``theta[..., j-m]`` is the polar angle of ``(-1)**j (E_{2j}, E_{2j-1})``;
    ``h[..., j-m-1]`` is the martingale increment ``h_j`` for
    ``j = m+1..n/2``.
    """

    n: int
    m: int
    logF: np.ndarray
    theta: np.ndarray
    h: np.ndarray
    log_abs_Dn: np.ndarray
    sign_n: np.ndarray
    log_abs_En: np.ndarray

    @property
    def j(self) -> np.ndarray:
        return np.arange(self.m, self.n // 2 + 1)

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.logF.shape[:-1]

    def __getitem__(self, idx) -> "DeterminantTrace":
        return DeterminantTrace(
            self.n, self.m, self.logF[idx], self.theta[idx], self.h[idx],
            self.log_abs_Dn[idx], self.sign_n[idx], self.log_abs_En[idx],
        )


def logdet_trace(T: TridiagonalModel, m: int | None = None) -> DeterminantTrace:
    """Run the exact pair recursion for ``(E_{2j}, E_{2j-1})``, ``j = 1..n/2``.

    Each step applies the two scalar recursions

        E_i = a_i / sqrt(i) * E_{i-1} - b_{i-1}**2 / sqrt(i (i-1)) * E_{i-2}

    for ``i = 2j-1, 2j`` to the current unit direction and renormalizes.  The
    trace records ``log F_j``, ``theta_j`` and ``h_j`` from ``j = m`` on.

    Raises
    ------
    ValueError
        If ``n`` is odd or ``m`` is out of range.
    DegenerateTraceError
        If ``F_j = 0`` at some step.
    """
    from .decomposition import h_from_direction

    n = T.n
    if n % 2:
        raise ValueError("the paired trace needs even n")
    half = n // 2
    if m is None:
        m = default_m(n)
    if not 1 <= m <= half:
        raise ValueError(f"m must lie in [1, {half}]")

    i = np.arange(1, n + 1, dtype=float)
    alpha = _step_major(T.a / np.sqrt(i))
    q = np.zeros(T.a.shape)
    q[..., 1:] = T.b**2 / np.sqrt(i[1:] * i[:-1])
    q = _step_major(q)
    a = _step_major(T.a)
    c = _step_major(c_sequence(T))

    batch = T.batch_shape
    x = np.ones(batch)   # E_{2j-2} / sqrt(F_{j-1})
    y = np.zeros(batch)  # E_{2j-3} / sqrt(F_{j-1})
    half_log_f = np.zeros(batch)
    count = half - m + 1
    logF = np.empty((count,) + batch)
    theta = np.empty((count,) + batch)
    h = np.empty((count - 1,) + batch)

    for j in range(1, half + 1):
        k = 2 * j - 1  # zero-based index of a_{2j}
        if j > m:
            # 1-based: c_{2j-1} -> c[2j-2], c_{2j-2} -> c[2j-3]
            h[j - m - 1] = h_from_direction(x, y, a[k], a[k - 1], c[k - 1], c[k - 2])
        e_odd = alpha[k - 1] * x - q[k - 1] * y
        e_even = alpha[k] * e_odd - q[k] * x
        r = np.hypot(e_even, e_odd)
        if np.any(r == 0):
            raise DegenerateTraceError(f"F_{j} vanished")
        x = e_even / r
        y = e_odd / r
        half_log_f = half_log_f + np.log(r)
        if j >= m:
            s = -1.0 if j % 2 else 1.0
            logF[j - m] = 2.0 * half_log_f
            theta[j - m] = np.arctan2(s * y, s * x)

    with np.errstate(divide="ignore"):
        log_abs_En = half_log_f + np.log(np.abs(x))
    log_half_fact = 0.5 * math.lgamma(n + 1)
    return DeterminantTrace(
        n=n,
        m=m,
        logF=np.moveaxis(logF, 0, -1),
        theta=np.moveaxis(theta, 0, -1),
        h=np.moveaxis(h, 0, -1),
        log_abs_Dn=log_abs_En + log_half_fact,
        sign_n=np.sign(x),
        log_abs_En=log_abs_En,
    )


def write_model_csv(T: TridiagonalModel, fh) -> None:
    """Write columns ``(i, a, b)``; ``b`` is empty on the last row."""
    if T.batch_shape:
        raise ValueError("CSV export needs an unbatched model")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["i", "a", "b"])
    for i in range(T.n):
        w.writerow([i + 1, repr(float(T.a[i])), repr(float(T.b[i])) if i < T.n - 1 else ""])


def write_trace_csv(trace: DeterminantTrace, fh) -> None:
    """Write columns ``(j, logF, theta, h)``; ``h`` is empty for ``j = m``."""
    if trace.batch_shape:
        raise ValueError("CSV export needs an unbatched trace")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["j", "logF", "theta", "h"])
    for idx, j in enumerate(trace.j):
        hv = repr(float(trace.h[idx - 1])) if idx > 0 else ""
        w.writerow([int(j), repr(float(trace.logF[idx])), repr(float(trace.theta[idx])), hv])
