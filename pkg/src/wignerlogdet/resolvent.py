"""Resolvent calculus for single-entry perturbations and the swap experiment.

Conventions: ``W`` is a (normalized) Hermitian matrix, ``R(z) = (W - z)**-1``
and ``s(z) = tr R(z) / n``.  A perturbation along an elementary matrix
``V`` is ``W_t = W_0 + t V / sqrt(n)``, with resolvent ``R_t``.

``opnorm(A, (q, p))`` is the ``l^p -> l^q`` operator norm, so ``(inf, 1)``
is the largest entry modulus and ``(inf, 2)`` the largest row norm.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .ensembles import EnsembleSpec, replicate_rng, sample_matrix
from .dense_logdet import logdet_shifted

__all__ = [
    "ElementaryMatrix",
    "opnorm",
    "NORM_PAIRS",
    "resolvent",
    "stieltjes",
    "taylor_coefficients",
    "ResolventExpansion",
    "expand_stieltjes",
    "neumann_sum",
    "expansion_remainder_probe",
    "ftc_logdet_identity",
    "SpectralDiagnostics",
    "spectral_diagnostics",
    "TestFunction",
    "G_CATALOG",
    "make_test_function",
    "semicircle_log_potential",
    "SwapResult",
    "swap_experiment",
    "SingularResolventError",
    "DivergenceRiskError",
    "QuadratureError",
]

INF = math.inf
NORM_PAIRS = ((INF, 1), (INF, 2), (2, 2), (2, 1), (INF, INF), (1, 1))


class SingularResolventError(ArithmeticError):
    """``z`` is real and (numerically) an eigenvalue."""


class DivergenceRiskError(ValueError):
    """``|t| ||R_0||_(inf,1) >= sqrt(n)/2``; the Neumann series may not converge."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""


@dataclass(frozen=True)
class ElementaryMatrix:
    """``e_a e_a*`` (diagonal), ``e_a e_b* + e_b e_a*`` (symmetric) or
    ``i e_a e_b* - i e_b e_a*`` (antisymmetric); indices are 0-based.
    """

    form: str
    a: int
    b: int | None = None

    def __post_init__(self):
        if self.form not in ("diagonal", "symmetric", "antisymmetric"):
            raise ValueError(f"unknown form {self.form!r}")
        if self.form == "diagonal":
            if self.b not in (None, self.a):
                raise ValueError("diagonal form takes a single index")
        elif self.b is None or self.b == self.a:
            raise ValueError("two-index forms need distinct a and b")

    def matrix(self, n: int) -> np.ndarray:
        V = np.zeros((n, n), dtype=complex)
        if self.form == "diagonal":
            V[self.a, self.a] = 1.0
        elif self.form == "symmetric":
            V[self.a, self.b] = V[self.b, self.a] = 1.0
        else:
            V[self.a, self.b] = 1j
            V[self.b, self.a] = -1j
        return V


def opnorm(A: np.ndarray, pair) -> float:
    """``||A||_(q,p)``, the ``l^p -> l^q`` operator norm, for ``pair = (q, p)``.

    Supported pairs are those in :data:`NORM_PAIRS`; ``(2, 1)`` is the
    largest column norm, i.e. ``||A*||_(inf,2)``.
    """
    A = np.atleast_2d(np.asarray(A))
    q, p = pair
    mod = np.abs(A)
    if (q, p) == (INF, 1):
        return float(mod.max())
    if (q, p) == (INF, 2):
        return float(np.sqrt((mod**2).sum(axis=1)).max())
    if (q, p) == (2, 1):
        return float(np.sqrt((mod**2).sum(axis=0)).max())
    if (q, p) == (2, 2):
        return float(np.linalg.norm(A, 2))
    if (q, p) == (INF, INF):
        return float(mod.sum(axis=1).max())
    if (q, p) == (1, 1):
        return float(mod.sum(axis=0).max())
    raise ValueError(f"unsupported norm pair {pair}")


def resolvent(W: np.ndarray, z: complex) -> np.ndarray:
    """``(W - z)**-1``."""
    W = np.asarray(W)
    n = W.shape[0]
    z = complex(z)
    if z.imag == 0.0:
        lam = np.linalg.eigvalsh(W)
        if np.min(np.abs(lam - z.real)) <= 1e-12 * max(1.0, np.max(np.abs(lam))):
            raise SingularResolventError(f"z = {z.real} is an eigenvalue")
    return np.linalg.inv(W - z * np.eye(n))


def stieltjes(W: np.ndarray, z: complex) -> complex:
    """``tr (W - z)**-1 / n``."""
    R = resolvent(W, z)
    return complex(np.trace(R) / R.shape[0])


def taylor_coefficients(R0: np.ndarray, V: ElementaryMatrix, k: int,
                        check_cyclic: bool = True) -> np.ndarray:
    """``c_j = (-1)**j tr((R_0 V)**j R_0) / n`` for ``j = 1..k``.

    With ``check_cyclic`` each trace is also evaluated as
    ``tr(V (R_0 V)**(j-1) R_0**2)`` and the two must agree to ``1e-12``
    relative to ``||R_0||_(inf,1)**(j+1)``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    R0 = np.asarray(R0)
    n = R0.shape[0]
    Vm = V.matrix(n)
    RV = R0 @ Vm
    R0sq = R0 @ R0
    scale = opnorm(R0, (INF, 1))
    out = np.empty(k, dtype=complex)
    P = np.eye(n, dtype=complex)  # (R_0 V)**(j-1)
    for j in range(1, k + 1):
        t1 = np.trace(P @ RV @ R0)
        if check_cyclic:
            t2 = np.trace(Vm @ P @ R0sq)
            if abs(t1 - t2) > 1e-12 * max(1.0, scale ** (j + 1)) * n:
                raise ArithmeticError(f"cyclic trace mismatch at order {j}")
        out[j - 1] = (-1) ** j * t1 / n
        P = P @ RV
    return out


@dataclass(frozen=True)
class ResolventExpansion:
    """Taylor data of ``s_t`` around ``t = 0`` with its bound envelope.

    ``envelope[j-1] = norm_inf1**j * min(norm_inf1, 1/(n eta))``; the ratio
    ``|c_j| / envelope`` is the empirical constant for that order.
    """

    z: complex
    t: float
    V: ElementaryMatrix
    k: int
    coeffs: np.ndarray
    remainder: complex
    norm_inf1: float
    envelope: np.ndarray = field(repr=False)
    K: float = 16.0

    @property
    def bound_ratios(self) -> np.ndarray:
        return np.abs(self.coeffs) / self.envelope

    @property
    def within_envelope(self) -> bool:
        return bool(np.all(self.bound_ratios <= self.K))


def _envelope(norm: float, n: int, eta: float, orders) -> np.ndarray:
    cap = min(norm, 1.0 / (n * eta)) if eta > 0 else norm
    return np.array([norm**j * cap for j in orders])


def expand_stieltjes(M0: np.ndarray, V: ElementaryMatrix, z: complex, k: int,
                     t: float = 0.0, K: float = 16.0) -> ResolventExpansion:
    """Coefficients, remainder at ``t`` and bound envelope for ``s_t(z)``."""
    n = np.asarray(M0).shape[0]
    R0 = resolvent(M0, z)
    coeffs = taylor_coefficients(R0, V, k)
    direct, truncated, rem = expansion_remainder_probe(M0, V, z, t, k, coeffs=coeffs)
    norm = opnorm(R0, (INF, 1))
    return ResolventExpansion(
        z=complex(z), t=float(t), V=V, k=k, coeffs=coeffs, remainder=rem,
        norm_inf1=norm, envelope=_envelope(norm, n, complex(z).imag, range(1, k + 1)), K=K,
    )


def neumann_sum(R0: np.ndarray, V: ElementaryMatrix, t: float, k: int) -> np.ndarray:
    """``R_0 + sum_{j=1}^k (-t/sqrt(n))**j (R_0 V)**j R_0``.

    Raises
    ------
    DivergenceRiskError
        If ``|t| ||R_0||_(inf,1) >= sqrt(n) / 2``.
    """
    R0 = np.asarray(R0)
    n = R0.shape[0]
    if abs(t) * opnorm(R0, (INF, 1)) >= math.sqrt(n) / 2:
        raise DivergenceRiskError("|t| ||R_0||_(inf,1) must stay below sqrt(n)/2")
    RV = R0 @ V.matrix(n)
    out = R0.astype(complex)
    term = R0.astype(complex)
    f = -t / math.sqrt(n)
    for _ in range(k):
        term = f * (RV @ term)
        out = out + term
    return out


def expansion_remainder_probe(M0: np.ndarray, V: ElementaryMatrix, z: complex, t: float,
                              k: int, coeffs=None) -> tuple[complex, complex, complex]:
    """``(s_t, s_0 + sum_{j<=k} n**(-j/2) c_j t**j, difference)`` with ``s_t`` computed directly."""
    M0 = np.asarray(M0)
    n = M0.shape[0]
    R0 = resolvent(M0, z)
    s0 = complex(np.trace(R0) / n)
    if k > 0 and coeffs is None:
        coeffs = taylor_coefficients(R0, V, k)
    truncated = s0
    for j in range(1, k + 1):
        truncated += n ** (-j / 2) * coeffs[j - 1] * t**j
    direct = stieltjes(M0 + t * V.matrix(n) / math.sqrt(n), z)
    return direct, truncated, direct - truncated


def ftc_logdet_identity(W: np.ndarray, z0: complex, T: float, quad_tol: float = 1e-8) -> float:
    """Residual of ``log|det(W - z0)| = log|det(W - E - iT)| - n Im int_{eta0}^T s(E + i eta) d eta``.

    The integral is taken over ``u = log(eta)`` (plus a linear piece near
    ``eta = 0`` when ``eta0 = 0``) with ``scipy.integrate.quad`` on the
    spectral form ``n Im s = sum_i eta / ((lambda_i - E)**2 + eta**2)``.
    Both determinants are evaluated by LU.

    Raises
    ------
    QuadratureError
        If quad's error estimate exceeds ``quad_tol``.
    """
    W = np.asarray(W)
    n = W.shape[0]
    z0 = complex(z0)
    E, eta0 = z0.real, abs(z0.imag)
    if T < eta0:
        raise ValueError("T must be at least eta0")
    lam = np.linalg.eigvalsh(W)
    d2 = (lam - E) ** 2

    def n_im_s(eta):
        return float(np.sum(eta / (d2 + eta * eta)))

    pieces = []
    lo = eta0
    # quad's own warnings are superseded by the error-estimate check below
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if lo == 0.0:
            gap = math.sqrt(float(d2.min()))
            if gap == 0.0:
                raise SingularResolventError("E is an eigenvalue")
            lo = min(gap, T)
            pieces.append(integrate.quad(n_im_s, 0.0, lo, epsabs=quad_tol / 4, epsrel=0, limit=200))
        if T > lo:
            pieces.append(
                integrate.quad(
                    lambda u: n_im_s(math.exp(u)) * math.exp(u),
                    math.log(lo), math.log(T), epsabs=quad_tol / 4, epsrel=0, limit=400,
                )
            )
    integral = math.fsum(p[0] for p in pieces)
    err = sum(p[1] for p in pieces)
    if err > quad_tol:
        raise QuadratureError(f"quadrature error estimate {err:.3g} exceeds {quad_tol:.3g}")
    eye = np.eye(n)
    lhs = np.linalg.slogdet(W - z0 * eye)[1]
    top = np.linalg.slogdet(W - complex(E, T) * eye)[1]
    return abs(lhs - top + integral)


@dataclass(frozen=True)
class SpectralDiagnostics:
    n: int
    E: float
    min_gap: float
    interval_counts: list
    deloc: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "E": self.E,
            "min_gap": self.min_gap,
            "interval_counts": [[lo, hi, c] for (lo, hi), c in self.interval_counts],
            "deloc": self.deloc,
        }


def spectral_diagnostics(W: np.ndarray, E: float, intervals=()) -> SpectralDiagnostics:
    """Gap to ``E``, eigenvalue counts per interval ``[lo, hi)`` and max eigenvector sup-norm."""
    W = np.asarray(W)
    lam, U = np.linalg.eigh(W)
    counts = [((float(lo), float(hi)), int(np.count_nonzero((lam >= lo) & (lam < hi))))
              for lo, hi in intervals]
    return SpectralDiagnostics(
        n=W.shape[0],
        E=float(E),
        min_gap=float(np.min(np.abs(lam - E))),
        interval_counts=counts,
        deloc=float(np.abs(U).max()),
    )


# --- swap experiment -------------------------------------------------------


def _hermite_sup(order: int) -> float:
    """``sup_u |d^j/du^j exp(-u**2)|`` for ``j = order``."""
    u = np.linspace(-8.0, 8.0, 16001)
    H = np.polynomial.hermite.Hermite.basis(order)(u)
    return float(np.max(np.abs(H * np.exp(-u * u))))


def _sigmoid_sups(orders: int) -> list[float]:
    """``sup |sigma^(j)|`` for the logistic function, ``j = 0..orders``.

    Uses ``sigma^(j) = P_j(sigma)`` with ``P_{j+1}(s) = P_j'(s) s (1 - s)``.
    """
    s = np.linspace(0.0, 1.0, 20001)
    P = np.polynomial.Polynomial([0.0, 1.0])
    logistic = np.polynomial.Polynomial([0.0, 1.0, -1.0])
    out = []
    for _ in range(orders + 1):
        out.append(float(np.max(np.abs(P(s)))))
        P = P.deriv() * logistic
    return out


@dataclass(frozen=True)
class TestFunction:
    """Smooth bounded ``G(x) = amplitude * g((x - center) / width)``.

    ``amplitude`` is chosen so that ``|G^(j)| <= 1`` for ``j = 0..5``.
    """

    __test__ = False

    name: str
    kind: str
    center: float
    width: float
    amplitude: float

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        finite = np.isfinite(x)
        u = np.where(finite, (np.where(finite, x, 0.0) - self.center) / self.width, 0.0)
        if self.kind == "bump":
            g = np.exp(-u * u)
        elif self.kind == "cosine":
            g = np.cos(u)
        else:
            g = 0.5 * (1.0 + np.tanh(0.5 * u))
        # G(-inf) = 0 for singular draws
        return np.where(finite, self.amplitude * g, 0.0)


def make_test_function(kind: str, center: float = 0.0, width: float = 1.0) -> TestFunction:
    """Build a catalog test function normalized to derivative bound 1 up to order 5."""
    if kind == "bump":
        sups = [_hermite_sup(j) for j in range(6)]
    elif kind == "cosine":
        sups = [1.0] * 6
    elif kind == "sigmoid":
        sups = _sigmoid_sups(5)
    else:
        raise ValueError(f"unknown test function {kind!r}")
    worst = max(s / width**j for j, s in enumerate(sups))
    return TestFunction(f"{kind}(c={center:g},w={width:g})", kind, center, width, 1.0 / worst)


G_CATALOG = {
    "bump": make_test_function("bump", 0.0, 1.0),
    "cosine": make_test_function("cosine", 0.0, 1.0),
    "sigmoid": make_test_function("sigmoid", 0.0, 1.0),
}


def semicircle_log_potential(z0: complex) -> float:
    """``int log|x - z0| rho_sc(x) dx`` for the semicircle law on ``[-2, 2]``."""
    z0 = complex(z0)
    if z0.imag == 0.0 and abs(z0.real) <= 2.0:
        return z0.real**2 / 4.0 - 0.5
    f = lambda x: math.log(abs(x - z0)) * math.sqrt(4.0 - x * x) / (2.0 * math.pi)
    return integrate.quad(f, -2.0, 2.0, limit=200)[0]


@dataclass(frozen=True)
class SwapResult:
    """Per test function ``(meanA, meanB, diff, pooled_stderr)``."""

    labels: tuple[str, str]
    n: int
    z0: complex
    N: int
    center: float
    scale: float
    results: dict

    def to_dict(self) -> dict:
        return {
            "ensembles": list(self.labels),
            "n": self.n,
            "z0": [self.z0.real, self.z0.imag],
            "N": self.N,
            "center": self.center,
            "scale": self.scale,
            "results": {
                k: {"meanA": a, "meanB": b, "diff": d, "pooled_stderr": s}
                for k, (a, b, d, s) in self.results.items()
            },
        }


def swap_logdets(spec: EnsembleSpec, n: int, z0: complex, N: int, seed: int,
                 start: int = 0) -> np.ndarray:
    """``log|det(M - sqrt(n) z0)|`` for replicates ``start..start+N-1``."""
    return np.array([
        logdet_shifted(sample_matrix(spec, n, replicate_rng(seed, r)), z0)
        for r in range(start, start + N)
    ])


def swap_experiment(ensA: EnsembleSpec, ensB: EnsembleSpec, n: int, z0: complex,
                    G="bump", N: int = 2000, seed: int = 0,
                    logdets: tuple[np.ndarray, np.ndarray] | None = None) -> SwapResult:
    """Compare ``E G(x)`` under two ensembles, ``x`` the standardized shifted log-determinant.

    ``x = (log|det(M - sqrt(n) z0)| - center) / scale`` with
    ``center = (n/2) log n + n * semicircle_log_potential(z0)`` and
    ``scale = sqrt(log(n) / 2)``; the same affine map is used for both
    ensembles.  Both ensembles use the replicate seeds of ``seed``, so equal
    ensembles give a difference of exactly zero.  ``G`` is a catalog name,
    a :class:`TestFunction`, or a list of either.
    """
    z0 = complex(z0)
    center = 0.5 * n * math.log(n) + n * semicircle_log_potential(z0)
    scale = math.sqrt(0.5 * math.log(n))
    if logdets is None:
        la = swap_logdets(ensA, n, z0, N, seed)
        lb = swap_logdets(ensB, n, z0, N, seed)
    else:
        la, lb = (np.asarray(x) for x in logdets)
        N = la.size
    xa = (la - center) / scale
    xb = (lb - center) / scale
    funcs = G if isinstance(G, (list, tuple)) else [G]
    results = {}
    for g in funcs:
        fn = G_CATALOG[g] if isinstance(g, str) else g
        key = g if isinstance(g, str) else fn.name
        ga, gb = fn(xa), fn(xb)
        ma, mb = float(ga.mean()), float(gb.mean())
        se = math.sqrt(ga.var(ddof=1) / ga.size + gb.var(ddof=1) / gb.size)
        results[key] = (ma, mb, ma - mb, se)
    return SwapResult((ensA.label, ensB.label), n, z0, N, center, scale, results)
