import math

import numpy as np
import pytest
from scipy.special import hermite

from wignerlogdet.ensembles import make_ensemble, replicate_rng, sample_matrix
from wignerlogdet.resolvent import (
    G_CATALOG,
    NORM_PAIRS,
    DivergenceRiskError,
    ElementaryMatrix,
    SingularResolventError,
    expand_stieltjes,
    expansion_remainder_probe,
    ftc_logdet_identity,
    make_test_function,
    neumann_sum,
    opnorm,
    resolvent,
    semicircle_log_potential,
    spectral_diagnostics,
    stieltjes,
    swap_experiment,
    taylor_coefficients,
)

INF = math.inf
ELEMENTARY = [ElementaryMatrix("diagonal", 0), ElementaryMatrix("symmetric", 0, 1),
              ElementaryMatrix("antisymmetric", 0, 1)]


def gue_w(n, seed):
    return sample_matrix(make_ensemble("gue"), n, replicate_rng(seed, 0)) / math.sqrt(n)


def rand_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_elementary_forms():
    V = ElementaryMatrix("antisymmetric", 1, 2).matrix(3)
    assert V[1, 2] == 1j and V[2, 1] == -1j and np.allclose(V, V.conj().T)
    assert ElementaryMatrix("diagonal", 2).matrix(3)[2, 2] == 1
    with pytest.raises(ValueError):
        ElementaryMatrix("symmetric", 1, 1)
    with pytest.raises(ValueError):
        ElementaryMatrix("rotation", 0, 1)


def test_opnorm_examples():
    assert opnorm(np.eye(3), (INF, 1)) == 1.0
    assert opnorm(np.ones((2, 2)), (INF, 2)) == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        opnorm(np.eye(2), (1, 2))


def test_opnorm_against_brute_force_definition():
    # sup of ||Ax||_q over the extreme points / random samples of the l^p ball
    rng = np.random.default_rng(0)
    A = rand_complex(rng, 4, 4)
    # (inf, 1): extreme points of the l^1 ball are unit basis vectors times phases
    assert opnorm(A, (INF, 1)) == pytest.approx(max(np.abs(A[:, j]).max() for j in range(4)))
    # (inf, 2): attained at x = conj(row)/|row|
    best = max(abs(A[i] @ (A[i].conj() / np.linalg.norm(A[i]))) for i in range(4))
    assert opnorm(A, (INF, 2)) == pytest.approx(best)
    # (2, 2) from the eigenvalues of A* A
    assert opnorm(A, (2, 2)) == pytest.approx(math.sqrt(np.linalg.eigvalsh(A.conj().T @ A).max()))


def test_duality_and_tts_identities():
    rng = np.random.default_rng(1)
    for _ in range(20):
        A = rand_complex(rng, 8, 8)
        assert abs(opnorm(A, (2, 1)) - opnorm(A.conj().T, (INF, 2))) <= 1e-12 * opnorm(A, (2, 1))
        lhs = opnorm(A, (INF, 2))
        rhs = math.sqrt(opnorm(A @ A.conj().T, (INF, 1)))
        assert abs(lhs - rhs) <= 1e-12 * lhs


def test_submultiplicativity():
    rng = np.random.default_rng(2)
    for _ in range(20):
        A, B = rand_complex(rng, 6, 6), rand_complex(rng, 6, 6)
        for (r, q) in NORM_PAIRS:
            for (q2, p) in NORM_PAIRS:
                if q2 != q:
                    continue
                assert opnorm(A @ B, (r, p)) <= opnorm(A, (r, q)) * opnorm(B, (q, p)) + 1e-10


@pytest.mark.parametrize("V", ELEMENTARY, ids=lambda v: v.form)
def test_elementary_norms_at_most_two(V):
    M = V.matrix(5)
    for pair in NORM_PAIRS:
        assert opnorm(M, pair) <= 2.0


def test_resolvent_scalar_and_stieltjes():
    z = 0.3 + 0.7j
    assert resolvent(np.zeros((1, 1)), z)[0, 0] == pytest.approx(-1 / z)
    assert stieltjes(np.zeros((1, 1)), z) == pytest.approx(-1 / z)
    assert stieltjes(np.diag([1.0, -1.0]), 1j) == pytest.approx(0.5j)


def test_resolvent_identities():
    W = gue_w(16, 3)
    z = 0.2 + 0.3j
    R = resolvent(W, z)
    Rs = R.conj().T
    scale = opnorm(R, (INF, 1)) ** 2
    assert opnorm(R @ Rs - (R - Rs) / (2j * z.imag), (INF, 1)) < 1e-12 * max(1.0, scale)
    assert opnorm(Rs @ R - (R - Rs) / (2j * z.imag), (INF, 1)) < 1e-12 * max(1.0, scale)
    dist = np.min(np.abs(np.linalg.eigvalsh(W) - z))
    assert opnorm(R, (2, 2)) == pytest.approx(1 / dist, rel=1e-10)


def test_resolvent_identity_under_perturbation():
    W = gue_w(16, 4)
    z, t, n = 0.1 + 0.2j, 0.8, 16
    V = ElementaryMatrix("symmetric", 2, 5).matrix(n)
    R0, Rt = resolvent(W, z), resolvent(W + t * V / math.sqrt(n), z)
    rhs = R0 - (t / math.sqrt(n)) * R0 @ V @ Rt
    assert opnorm(Rt - rhs, (INF, 1)) <= 1e-10 * opnorm(Rt, (INF, 1))


def test_singular_real_z():
    with pytest.raises(SingularResolventError):
        resolvent(np.diag([1.0, 2.0]), 2.0)


def test_herglotz():
    rng = np.random.default_rng(5)
    for k in range(100):
        W = gue_w(8, 100 + k)
        z = complex(rng.uniform(-3, 3), rng.uniform(1e-3, 2))
        assert stieltjes(W, z).imag > 0


def test_taylor_scalar_case():
    z = 0.4 + 0.9j
    c = taylor_coefficients(np.array([[-1 / z]]), ElementaryMatrix("diagonal", 0), 3)
    # s_t = 1 / (t - z) = -1/z - t/z^2 - t^2/z^3 ...
    assert c[0] == pytest.approx(-1 / z**2)
    assert c[1] == pytest.approx(-1 / z**3)


def test_taylor_first_coefficient_finite_difference():
    n = 12
    W = gue_w(n, 6)
    z = 0.3 + 0.4j
    V = ElementaryMatrix("antisymmetric", 1, 4)
    c1 = taylor_coefficients(resolvent(W, z), V, 1)[0]
    t = 1e-6
    fd = (stieltjes(W + t * V.matrix(n) / math.sqrt(n), z) - stieltjes(W, z)) / (t / math.sqrt(n))
    assert abs(c1 - fd) < 1e-6


def test_coefficient_envelope_k16():
    rng = np.random.default_rng(7)
    worst = 0.0
    for k in range(100):
        W = gue_w(32, 200 + k)
        z = complex(rng.uniform(-1.5, 1.5), rng.uniform(0.05, 1.0))
        V = ELEMENTARY[k % 3] if k % 3 == 0 else ElementaryMatrix(ELEMENTARY[k % 3].form, 3, 17)
        exp = expand_stieltjes(W, V, z, 4)
        worst = max(worst, exp.bound_ratios.max())
        assert exp.within_envelope
    assert worst <= 16


def test_neumann_sum():
    W = gue_w(16, 8)
    z = 0.2 + 0.5j
    R0 = resolvent(W, z)
    V = ElementaryMatrix("symmetric", 0, 3)
    assert np.array_equal(neumann_sum(R0, V, 0.0, 5), R0)
    t = 1.0
    direct = resolvent(W + t * V.matrix(16) / 4.0, z)
    errs = [opnorm(neumann_sum(R0, V, t, k) - direct, (INF, 1)) for k in range(6)]
    ratios = [b / a for a, b in zip(errs, errs[1:])]
    assert all(r < 0.5 for r in ratios)
    assert max(ratios) / min(ratios) < 3  # geometric decay
    with pytest.raises(DivergenceRiskError):
        neumann_sum(R0, V, 1e6, 3)


def test_neumann_scalar_geometric_series():
    z = 0.5j
    R0 = np.array([[-1 / z]])
    V = ElementaryMatrix("diagonal", 0)
    t = 0.2
    for k in range(5):
        ref = sum((-t) ** j * (-1 / z) ** (j + 1) for j in range(k + 1))
        assert neumann_sum(R0, V, t, k)[0, 0] == pytest.approx(ref)


def test_remainder_k0_and_halving():
    W = gue_w(32, 9)
    z = 0.1 + 0.5j
    V = ElementaryMatrix("symmetric", 0, 1)
    direct, trunc, rem = expansion_remainder_probe(W, V, z, 0.7, 0)
    assert rem == direct - stieltjes(W, z)
    r1 = expansion_remainder_probe(W, V, z, 1.0, 4)[2]
    r2 = expansion_remainder_probe(W, V, z, 0.5, 4)[2]
    assert 20 <= abs(r1) / abs(r2) <= 45


def test_remainder_envelope_k16():
    rng = np.random.default_rng(10)
    n, k = 32, 4
    for r in range(100):
        W = gue_w(n, 400 + r)
        z = complex(rng.uniform(-1.5, 1.5), rng.uniform(0.1, 1.0))
        V = ELEMENTARY[r % 3] if r % 3 == 0 else ElementaryMatrix(ELEMENTARY[r % 3].form, 2, 9)
        R0 = resolvent(W, z)
        norm = opnorm(R0, (INF, 1))
        t = 0.25 * math.sqrt(n) / norm  # inside the Neumann precondition
        rem = expansion_remainder_probe(W, V, z, t, k)[2]
        bound = 16 * (t / math.sqrt(n)) ** (k + 1) * norm ** (k + 1) * min(norm, 1 / (n * z.imag))
        assert abs(rem) <= bound


def test_ftc_cases():
    W = gue_w(16, 11)
    assert ftc_logdet_identity(W, 0.3 + 0.2j, 0.2) == pytest.approx(0.0, abs=1e-12)
    assert ftc_logdet_identity(np.zeros((1, 1)), 1j, 10.0) < 1e-10
    for s in range(5):
        W = gue_w(16, 20 + s)
        assert ftc_logdet_identity(W, 0.3, 100.0, quad_tol=1e-7) < 1e-6
        assert ftc_logdet_identity(W, -0.5 + 0.01j, 100.0, quad_tol=1e-7) < 1e-6
    with pytest.raises(ValueError):
        ftc_logdet_identity(W, 0.3 + 1j, 0.5)


def test_spectral_diagnostics():
    d = spectral_diagnostics(np.zeros((1, 1)), 1.0)
    assert d.min_gap == 1.0 and d.deloc == 1.0
    W = gue_w(256, 12)
    d = spectral_diagnostics(W, 0.0, [(-0.05, 0.05), (0.05, 0.15)])
    assert all(c >= 0 for _, c in d.interval_counts)
    assert sum(c for _, c in d.interval_counts) <= 256
    assert 1 / 16 <= d.deloc <= 1
    assert d.to_dict()["interval_counts"][0][:2] == [-0.05, 0.05]


def test_interval_counts_bounded():
    ratios = []
    for r in range(100):
        d = spectral_diagnostics(gue_w(256, 1000 + r), 0.0, [(-0.05, 0.05)])
        ratios.append(d.interval_counts[0][1] / (256 * 0.1))
    assert max(ratios) < 1.0  # semicircle density at 0 is 1/pi


@pytest.mark.parametrize("name", sorted(G_CATALOG))
def test_catalog_derivative_bounds(name):
    # oracle: finite differences of increasing order on a fine grid
    G = G_CATALOG[name]
    h = 1e-2
    x = np.arange(-12, 12, h)
    y = G(x)
    assert np.max(np.abs(y)) <= 1 + 1e-12
    d = y
    for order in range(1, 6):
        d = np.diff(d) / h
        assert np.max(np.abs(d)) <= 1 + 0.05 * order


def test_bump_scaling_matches_hermite():
    w = 0.5
    G = make_test_function("bump", 0.0, w)
    u = np.linspace(-6, 6, 20001)
    sups = [np.max(np.abs(hermite(j)(u) * np.exp(-u * u))) / w**j for j in range(6)]
    assert G.amplitude == pytest.approx(1 / max(sups), rel=1e-6)


def test_G_minus_inf_is_zero():
    for G in G_CATALOG.values():
        assert G(np.array([-np.inf]))[0] == 0.0


def test_semicircle_potential():
    assert semicircle_log_potential(0.0) == pytest.approx(-0.5)
    # compare the closed form with quadrature just off the real axis
    assert semicircle_log_potential(1.0 + 1e-9j) == pytest.approx(0.25 - 0.5, abs=1e-6)


def test_swap_equal_ensembles_zero():
    g = make_ensemble("gue")
    res = swap_experiment(g, g, 16, 0.2, ["bump", "cosine"], N=50, seed=3)
    assert all(v[2] == 0.0 for v in res.results.values())


def test_swap_bernoulli_reports():
    res = swap_experiment(make_ensemble("gue"), make_ensemble("bernoulli-complex"), 16, 0.2,
                          "bump", N=100, seed=4)
    meanA, meanB, diff, se = res.results["bump"]
    assert diff == meanA - meanB and se > 0
