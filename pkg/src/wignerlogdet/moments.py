"""Exact determinant moments from the Leibniz expansion.

Permutations are tuples of 0-based images: ``p[i]`` is the image of ``i``.
:func:`perm_from_cycles` builds one from 1-based cycle notation, so
``perm_from_cycles([(1, 2, 3)], 3) == (1, 2, 0)``.

With ``I_s = sgn(s) prod_i z_{i s(i)}``, ``E det M = sum_s E I_s`` and
``E |det M|**2 = sum_{s,r} E I_s conj(I_r)``.  The pair expectation
vanishes unless the two permutations share their cycles of length other
than two (up to reversal for GOE, exactly for GUE) and the supports of
their 2-cycles coincide; it then equals ``2**C1 * 3**c`` (GOE) or ``2**c``
(GUE), ``c`` being the number of common 2-cycles.  All arithmetic here is
on Python integers.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ensembles import EnsembleSpec, replicate_rng, sample_matrix
from .dense_logdet import logdet_general, logdet_hermitian

__all__ = [
    "perm_from_cycles",
    "cycles",
    "cycle_type",
    "sign",
    "pair_expectation",
    "perfect_matching_count",
    "first_moment_exact",
    "first_moment_bruteforce",
    "ExactMoment",
    "second_moment_bruteforce",
    "second_moment_exact",
    "compatible_count",
    "compatible_formula",
    "compatible_counts_all",
    "pair_sum",
    "pair_sum_formula",
    "cycle_type_upper_summand",
    "double_counting_sums",
    "turan_check",
    "moment_mc",
    "first_moment_stirling_ratio",
    "STIRLING_LIMIT",
]

CLASSES = ("goe", "gue")
BRUTEFORCE_MAX_N = 7
COMPATIBLE_MAX_N = 8
STIRLING_LIMIT = (2.0 / math.pi) ** 0.25


def _check_class(cls: str) -> None:
    if cls not in CLASSES:
        raise ValueError(f"class must be one of {CLASSES}")


def perm_from_cycles(cyc, n: int) -> tuple[int, ...]:
    """Permutation of ``{0..n-1}`` from 1-based cycles, e.g. ``[(1, 2), (3, 4)]``."""
    img = list(range(n))
    for c in cyc:
        for x, y in zip(c, c[1:] + c[:1]):
            img[x - 1] = y - 1
    if sorted(img) != list(range(n)):
        raise ValueError("cycles do not define a permutation")
    return tuple(img)


@lru_cache(maxsize=None)
def cycles(p: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    """Disjoint cycles of ``p``, each rotated to start at its smallest element."""
    seen = [False] * len(p)
    out = []
    for start in range(len(p)):
        if seen[start]:
            continue
        c = []
        x = start
        while not seen[x]:
            seen[x] = True
            c.append(x)
            x = p[x]
        out.append(tuple(c))
    return tuple(out)


def cycle_type(p) -> dict[int, int]:
    """``{k: C_k}`` with ``C_k`` the number of ``k``-cycles (zero counts omitted)."""
    return dict(sorted(Counter(len(c) for c in cycles(tuple(p))).items()))


def sign(p) -> int:
    p = tuple(p)
    return -1 if (len(p) - len(cycles(p))) % 2 else 1


def _unoriented(c: tuple[int, ...]) -> tuple[int, ...]:
    if len(c) < 3:
        return c
    rev = (c[0],) + tuple(reversed(c[1:]))
    return min(c, rev)


@lru_cache(maxsize=None)
def _structure(p: tuple[int, ...], cls: str):
    """Compatibility key and the set of 2-cycles of ``p``.

    Two permutations give a non-vanishing pair expectation iff their keys
    are equal.
    """
    cyc = cycles(p)
    two = frozenset(c for c in cyc if len(c) == 2)
    support = frozenset(x for c in two for x in c)
    if cls == "goe":
        others = frozenset(_unoriented(c) for c in cyc if len(c) != 2)
    else:
        others = frozenset(c for c in cyc if len(c) != 2)
    ones = sum(1 for c in cyc if len(c) == 1)
    return (others, support), two, ones


def pair_expectation(sigma, rho, cls: str) -> int:
    """``E I_sigma conj(I_rho)`` for GOE or GUE entries."""
    _check_class(cls)
    sigma, rho = tuple(sigma), tuple(rho)
    if len(sigma) != len(rho):
        raise ValueError("permutations must have the same size")
    key_s, two_s, ones = _structure(sigma, cls)
    key_r, two_r, _ = _structure(rho, cls)
    if key_s != key_r:
        return 0
    common = len(two_s & two_r)
    if cls == "goe":
        return 2**ones * 3**common
    return 2**common


def perfect_matching_count(n: int) -> int:
    """``n! / ((n/2)! 2**(n/2))`` for even ``n``, else 0."""
    if n % 2:
        return 0
    h = n // 2
    return math.factorial(n) // (math.factorial(h) * 2**h)


def first_moment_exact(n: int) -> int:
    """``E det M_n`` for any Wigner matrix: ``(-1)**(n/2) (n-1)!!``, or 0 for odd ``n``."""
    if n % 2:
        return 0
    return (-1) ** (n // 2) * perfect_matching_count(n)


def first_moment_bruteforce(n: int) -> int:
    """``sum_s E I_s`` over ``S_n``; only fixed-point-free involutions contribute ``sgn(s)``."""
    if n > COMPATIBLE_MAX_N:
        raise ValueError(f"enumeration limited to n <= {COMPATIBLE_MAX_N}")
    total = 0
    for p in itertools.permutations(range(n)):
        if all(len(c) == 2 for c in cycles(p)):
            total += sign(p)
    return total


@dataclass(frozen=True)
class ExactMoment:
    value: int
    n: int
    which: str
    ensemble: str


def second_moment_bruteforce(n: int, cls: str) -> ExactMoment:
    """``E |det M_n|**2`` summed over all pairs of ``S_n``.

    Permutations are bucketed by their compatibility key first; pairs from
    different buckets have zero expectation, so only same-bucket pairs are
    evaluated.  The result equals the plain double sum.
    """
    _check_class(cls)
    if n > BRUTEFORCE_MAX_N:
        raise ValueError(f"brute force limited to n <= {BRUTEFORCE_MAX_N}")
    buckets = defaultdict(list)
    for p in itertools.permutations(range(n)):
        buckets[_structure(p, cls)[0]].append(p)
    total = 0
    for group in buckets.values():
        for s in group:
            for r in group:
                total += pair_expectation(s, r, cls)
    return ExactMoment(total, n, "second", cls)


@lru_cache(maxsize=None)
def _avoiding_matchings(r: int) -> int:
    """Perfect matchings of ``2r`` points sharing no pair with a fixed one."""
    return sum(
        (-1) ** i * math.comb(r, i) * perfect_matching_count(2 * (r - i)) for i in range(r + 1)
    )


def _matching_weight(m: int, base: int) -> int:
    """``sum_mu base**|mu & mu0|`` over perfect matchings ``mu`` of ``2m`` points."""
    return sum(base**c * math.comb(m, c) * _avoiding_matchings(m - c) for c in range(m + 1))


def second_moment_exact(n: int, cls: str) -> int:
    """``E |det M_n|**2`` for GOE/GUE by summing over cycle structure.

    Writes the pair sum as ``sum_m binom(n, 2m) (2m-1)!! S(m) A(n-2m)`` where
    ``S(m)`` weights the 2-cycle matchings and ``A(r)`` counts 2-cycle-free
    permutations of ``r`` points with weight ``w_1**C1 prod_{k>=3} w_k**Ck``
    (``w = 2`` for GOE, 1 for GUE).
    """
    _check_class(cls)
    w = 2 if cls == "goe" else 1
    base = 3 if cls == "goe" else 2
    A = [1] + [0] * n
    for r in range(1, n + 1):
        acc = 0
        for k in range(1, r + 1):
            if k == 2:
                continue
            acc += w * math.perm(r - 1, k - 1) * A[r - k]
        A[r] = acc
    return sum(
        math.comb(n, 2 * m) * perfect_matching_count(2 * m) * _matching_weight(m, base) * A[n - 2 * m]
        for m in range(n // 2 + 1)
    )


def compatible_formula(sigma, cls: str) -> int:
    """``(2 C2)! / (C2! 2**C2) * prod_{k>=3} 2**Ck`` (GOE); no ``2**Ck`` factors for GUE."""
    _check_class(cls)
    ct = cycle_type(sigma)
    c2 = ct.get(2, 0)
    count = perfect_matching_count(2 * c2)
    if cls == "goe":
        count *= 2 ** sum(v for k, v in ct.items() if k >= 3)
    return count


def compatible_count(sigma, cls: str) -> tuple[int, int]:
    """(enumerated, formula) number of ``rho`` with ``E I_sigma conj(I_rho) != 0``."""
    sigma = tuple(sigma)
    n = len(sigma)
    if n > COMPATIBLE_MAX_N:
        raise ValueError(f"enumeration limited to n <= {COMPATIBLE_MAX_N}")
    found = sum(
        1 for rho in itertools.permutations(range(n)) if pair_expectation(sigma, rho, cls) != 0
    )
    return found, compatible_formula(sigma, cls)


def compatible_counts_all(n: int, cls: str):
    """Yield ``(sigma, enumerated, formula)`` for every ``sigma`` in ``S_n``.

    Every ``rho`` is classified once by its compatibility key, so the
    enumerated count of ``sigma`` is the size of its key class.
    """
    _check_class(cls)
    if n > COMPATIBLE_MAX_N:
        raise ValueError(f"enumeration limited to n <= {COMPATIBLE_MAX_N}")
    perms = list(itertools.permutations(range(n)))
    sizes = Counter(_structure(p, cls)[0] for p in perms)
    for p in perms:
        yield p, sizes[_structure(p, cls)[0]], compatible_formula(p, cls)


def pair_sum(sigma, cls: str) -> int:
    """``sum_rho E I_sigma conj(I_rho)`` by enumeration of ``rho``."""
    sigma = tuple(sigma)
    return sum(pair_expectation(sigma, r, cls) for r in itertools.permutations(range(len(sigma))))


def pair_sum_formula(sigma, cls: str) -> int:
    """Closed form of :func:`pair_sum` using matchings that avoid the 2-cycles of ``sigma``."""
    _check_class(cls)
    ct = cycle_type(sigma)
    c2 = ct.get(2, 0)
    if cls == "goe":
        return 2 ** ct.get(1, 0) * _matching_weight(c2, 3) * 2 ** sum(
            v for k, v in ct.items() if k >= 3
        )
    return _matching_weight(c2, 2)


def cycle_type_upper_summand(sigma) -> int:
    """GOE upper bound ``2**C1 sum_c 3**c binom(C2,c) (2(C2-c)-1)!! prod_{k>=3} 2**Ck``.

    This over-counts ``rho`` with more than ``c`` common 2-cycles, so it is
    an upper bound for :func:`pair_sum`, with equality iff ``C2 == 0``.
    """
    ct = cycle_type(sigma)
    c2 = ct.get(2, 0)
    inner = sum(
        3**c * math.comb(c2, c) * perfect_matching_count(2 * (c2 - c)) for c in range(c2 + 1)
    )
    return 2 ** ct.get(1, 0) * inner * 2 ** sum(v for k, v in ct.items() if k >= 3)


def double_counting_sums(n: int, cls: str) -> list[tuple[int, int, int]]:
    """For each ``m``: ``(m, S_m, bound)`` where ``S_m = sum_{s: C2=m} m! 2**m W(s)``.

    ``W(s) = prod_{k != 2} 2**Ck`` for GOE (1 for GUE); the double-counting
    argument gives ``S_m <= (n - 2m + 1) n!`` for GOE and ``S_m <= n!`` for GUE.
    """
    _check_class(cls)
    if n > COMPATIBLE_MAX_N:
        raise ValueError(f"enumeration limited to n <= {COMPATIBLE_MAX_N}")
    sums = Counter()
    for p in itertools.permutations(range(n)):
        ct = cycle_type(p)
        m = ct.get(2, 0)
        weight = 2 ** sum(v for k, v in ct.items() if k != 2) if cls == "goe" else 1
        sums[m] += math.factorial(m) * 2**m * weight
    nf = math.factorial(n)
    return [
        (m, sums[m], (n - 2 * m + 1) * nf if cls == "goe" else nf) for m in range(n // 2 + 1)
    ]


def _gaussian_monomial(power: int) -> int:
    """``E X**power`` for ``X ~ N(0,1)``."""
    if power % 2:
        return 0
    return math.prod(range(power - 1, 0, -2))


def turan_check(n: int) -> tuple[int, int]:
    """``(sum_s E I_s**2, n!)`` for an iid ``N(0,1)`` matrix.

    Each ``E I_s**2`` is evaluated from the multiplicities of the entries
    ``(i, s(i))`` in the product.
    """
    if n > BRUTEFORCE_MAX_N:
        raise ValueError(f"enumeration limited to n <= {BRUTEFORCE_MAX_N}")
    total = 0
    for p in itertools.permutations(range(n)):
        mult = Counter()
        for i, j in enumerate(p):
            mult[(i, j)] += 2
        total += math.prod(_gaussian_monomial(k) for k in mult.values())
    return total, math.factorial(n)


def moment_mc(spec: EnsembleSpec, n: int, which: str, N: int, seed: int,
              method: str = "dense") -> tuple[float, float]:
    """Monte Carlo estimate of ``E det`` (``which="first"``) or ``E |det|**2``.

    Replicate ``r`` uses :func:`~wignerlogdet.ensembles.replicate_rng`.  With
    ``method="tridiagonal"`` GUE/GOE draws come from the Trotter model, which
    has the same spectrum law.  Results overflow to ``inf`` only when the
    estimate itself exceeds the float range.

    Returns
    -------
    estimate, stderr : float
    """
    if which not in ("first", "second"):
        raise ValueError("which must be 'first' or 'second'")
    if N < 2:
        raise ValueError("need N >= 2")
    if method == "tridiagonal":
        from .tridiag import TridiagonalModel, det_recursion_exact, sample_tridiagonal

        beta = {"gue": 2, "goe": 1}.get(spec.label)
        if beta is None:
            raise ValueError("tridiagonal method needs the gue or goe ensemble")
        a = np.empty((N, n))
        b = np.empty((N, n - 1))
        for r in range(N):
            T = sample_tridiagonal(n, beta, replicate_rng(seed, r))
            a[r], b[r] = T.a, T.b
        la, sg = det_recursion_exact(TridiagonalModel(a, b, beta))
        log_abs, sgn = la[:, -1], sg[:, -1]
    elif method == "dense":
        log_abs = np.empty(N)
        sgn = np.empty(N)
        for r in range(N):
            M = sample_matrix(spec, n, replicate_rng(seed, r))
            res = logdet_hermitian(M) if spec.family == "wigner-hermitian" else logdet_general(M)
            log_abs[r], sgn[r] = res.log_abs, res.sign
    else:
        raise ValueError("method must be 'dense' or 'tridiagonal'")
    # factor out the largest term so the variance does not overflow
    logs = log_abs if which == "first" else 2.0 * log_abs
    shift = float(np.max(logs[np.isfinite(logs)], initial=0.0))
    vals = np.exp(logs - shift)
    if which == "first":
        vals = sgn * vals
    scale = math.exp(shift) if shift < 709 else math.inf
    with np.errstate(over="ignore", invalid="ignore"):
        return float(vals.mean() * scale), float(vals.std(ddof=1) / math.sqrt(N) * scale)


def first_moment_stirling_ratio(n: int) -> float:
    """``|E det M_n| / (n**(-1/4) sqrt(n!))`` for even ``n``, evaluated in logs."""
    if n % 2 or n < 2:
        raise ValueError("n must be even and positive")
    return math.exp(math.log(perfect_matching_count(n)) + 0.25 * math.log(n) - 0.5 * math.lgamma(n + 1))
