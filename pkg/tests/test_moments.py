import itertools
import math
from collections import Counter

import numpy as np
import pytest

from wignerlogdet.ensembles import make_ensemble
from wignerlogdet.moments import (
    STIRLING_LIMIT,
    cycle_type_upper_summand,
    compatible_count,
    compatible_counts_all,
    cycle_type,
    double_counting_sums,
    first_moment_bruteforce,
    first_moment_exact,
    first_moment_stirling_ratio,
    moment_mc,
    pair_expectation,
    pair_sum,
    pair_sum_formula,
    perfect_matching_count,
    perm_from_cycles,
    second_moment_bruteforce,
    second_moment_exact,
    sign,
    turan_check,
)


def _dfact(k):
    return math.prod(range(k - 1, 0, -2))


def monomial_oracle(sigma, rho, cls):
    """E I_sigma conj(I_rho) by collecting entry multiplicities.

    GOE: off-diagonal N(0,1), diagonal N(0,2).  GUE: off-diagonal standard
    complex Gaussian (E z^a conj(z)^b = a! [a == b]), diagonal N(0,1).
    """
    n = len(sigma)
    factors = [(i, sigma[i]) for i in range(n)] + [(rho[i], i) for i in range(n)]
    if cls == "goe":
        mult = Counter(tuple(sorted(f)) for f in factors)
        val = 1
        for (i, j), k in mult.items():
            if k % 2:
                return 0
            val *= _dfact(k) * (2 ** (k // 2) if i == j else 1)
    else:
        diag = Counter(i for i, j in factors if i == j)
        up = Counter((i, j) for i, j in factors if i < j)
        down = Counter((j, i) for i, j in factors if i > j)
        val = 1
        for k in diag.values():
            if k % 2:
                return 0
            val *= _dfact(k)
        for key in set(up) | set(down):
            if up[key] != down[key]:
                return 0
            val *= math.factorial(up[key])
    return sign(sigma) * sign(rho) * val


def test_cycle_type_examples():
    assert cycle_type(perm_from_cycles([], 4)) == {1: 4}
    assert cycle_type(perm_from_cycles([(1, 2)], 2)) == {2: 1}
    assert cycle_type(perm_from_cycles([(1, 2, 3)], 3)) == {3: 1}
    with pytest.raises(ValueError):
        perm_from_cycles([(1, 2), (2, 3)], 3)


def test_pair_expectation_examples():
    e = perm_from_cycles([], 2)
    t = perm_from_cycles([(1, 2)], 2)
    assert pair_expectation(e, e, "goe") == 4
    assert pair_expectation(t, t, "goe") == 3
    c = perm_from_cycles([(1, 2, 3)], 3)
    cinv = perm_from_cycles([(1, 3, 2)], 3)
    assert pair_expectation(c, cinv, "gue") == 0
    assert pair_expectation(c, cinv, "goe") == 1
    with pytest.raises(ValueError):
        pair_expectation(e, c, "goe")


@pytest.mark.parametrize("cls", ["goe", "gue"])
@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_pair_expectation_vs_monomial_oracle(n, cls):
    perms = list(itertools.permutations(range(n)))
    for s in perms:
        for r in perms:
            assert pair_expectation(s, r, cls) == monomial_oracle(s, r, cls)


@pytest.mark.parametrize("cls", ["goe", "gue"])
def test_pair_expectation_symmetry(cls):
    for s, r in itertools.product(itertools.permutations(range(4)), repeat=2):
        assert pair_expectation(s, r, cls) == pair_expectation(r, s, cls)


def test_perfect_matchings():
    assert [perfect_matching_count(n) for n in (1, 2, 4, 6, 8)] == [0, 1, 3, 15, 105]
    for n in range(2, 30, 2):
        assert perfect_matching_count(n) == _dfact(n)


def test_first_moment():
    assert first_moment_exact(3) == 0
    assert first_moment_exact(2) == -1
    assert first_moment_exact(4) == 3
    for n in range(1, 9):
        assert first_moment_bruteforce(n) == first_moment_exact(n)


def test_stirling_ratio():
    ratios = [first_moment_stirling_ratio(n) for n in range(2, 402, 2)]
    assert abs(ratios[-1] / STIRLING_LIMIT - 1) < 0.01
    gaps = [abs(r - STIRLING_LIMIT) for r in ratios]
    assert all(a >= b for a, b in zip(gaps, gaps[1:]))


def test_second_moment_small():
    assert second_moment_bruteforce(2, "goe").value == 7
    assert second_moment_bruteforce(2, "gue").value == 3
    assert second_moment_bruteforce(1, "goe").value == 2
    with pytest.raises(ValueError):
        second_moment_bruteforce(8, "goe")


@pytest.mark.parametrize("cls", ["goe", "gue"])
def test_bucketed_bruteforce_equals_double_loop(cls):
    for n in (3, 4, 5):
        perms = list(itertools.permutations(range(n)))
        plain = sum(pair_expectation(s, r, cls) for s in perms for r in perms)
        assert second_moment_bruteforce(n, cls).value == plain


@pytest.mark.parametrize("cls", ["goe", "gue"])
def test_exact_matches_bruteforce(cls):
    for n in range(1, 8):
        assert second_moment_exact(n, cls) == second_moment_bruteforce(n, cls).value


def test_compatible_examples():
    s = perm_from_cycles([(1, 2), (3, 4)], 4)
    assert compatible_count(s, "goe") == (3, 3)
    assert compatible_count(perm_from_cycles([], 3), "goe") == (1, 1)
    assert compatible_count(perm_from_cycles([(1, 2, 3)], 3), "goe") == (2, 2)
    assert compatible_count(perm_from_cycles([(1, 2, 3)], 3), "gue") == (1, 1)


@pytest.mark.parametrize("cls", ["goe", "gue"])
def test_compatible_counts_all_small(cls):
    for n in range(1, 6):
        for sigma, found, formula in compatible_counts_all(n, cls):
            assert found == formula
            assert found == compatible_count(sigma, cls)[0]


def test_pair_sums_vs_cycle_type_summand():
    for n in range(1, 7):
        for sigma in itertools.permutations(range(n)):
            exact = pair_sum(sigma, "goe")
            assert exact == pair_sum_formula(sigma, "goe")
            upper = cycle_type_upper_summand(sigma)
            assert exact <= upper
            assert (exact == upper) == (cycle_type(sigma).get(2, 0) == 0)
        for sigma in itertools.permutations(range(n)):
            assert pair_sum(sigma, "gue") == pair_sum_formula(sigma, "gue")


@pytest.mark.parametrize("cls", ["goe", "gue"])
def test_double_counting_bounds(cls):
    for n in range(1, 8):
        rows = double_counting_sums(n, cls)
        assert all(s <= bound for _, s, bound in rows)


def test_turan():
    assert turan_check(1) == (1, 1)
    assert turan_check(3) == (6, 6)
    assert turan_check(6) == (720, 720)


def test_moment_mc_goe_n4():
    spec = make_ensemble("goe")
    est, se = moment_mc(spec, 4, "first", 100_000, seed=0)
    assert abs(est - 3) <= 3 * se
    est2, se2 = moment_mc(spec, 4, "second", 100_000, seed=1)
    assert abs(est2 - second_moment_bruteforce(4, "goe").value) <= 3 * se2


def test_moment_mc_tridiagonal_agrees():
    spec = make_ensemble("gue")
    est, se = moment_mc(spec, 5, "second", 40_000, seed=2, method="tridiagonal")
    assert abs(est - second_moment_exact(5, "gue")) <= 3 * se
    with pytest.raises(ValueError):
        moment_mc(make_ensemble("bernoulli-complex"), 4, "first", 10, 0, method="tridiagonal")
    with pytest.raises(ValueError):
        moment_mc(spec, 4, "third", 10, 0)


def test_exact_values_are_integers():
    v = second_moment_exact(60, "goe")
    assert isinstance(v, int) and v > math.factorial(60)
