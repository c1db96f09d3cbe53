import math

import numpy as np
import numpy.testing as npt
import pytest

from qmcstats import (
    NotOnSimplex,
    ParamOutOfRange,
    ScgfEvaluator,
    clt_moments,
    example_model,
    finite_mgf_bruteforce,
    finite_mgf_lemma,
    rate_function,
    scgf,
    stationary_string_probabilities,
    tail_rate_bound,
)

E0 = np.array([1.0, 0.0], dtype=complex)
PLUS = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)


def coin_lambda(s):
    return (math.exp(s) + 1.0) / 2.0


def test_mgf_at_zero_tilt_is_one(random_families):
    for fam, m in ((random_families[0], 1), (random_families[1], 2)):
        for route in (finite_mgf_lemma, finite_mgf_bruteforce):
            res = route(fam, E0, m, np.zeros(fam.k**m), 6)
            assert res.value == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("s", [-1.5, -0.3, 0.0, 0.8, 2.0])
@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_mgf_coin_closed_forms(coin, s, n):
    # at omega = pi/2 the output is an i.i.d. fair coin after the first
    # outcome; from |0> the first outcome is always 0, from |+> it is fair
    t = np.array([s, 0.0])
    lam = coin_lambda(s)
    from_e0 = finite_mgf_lemma(coin, E0, 1, t, n)
    assert from_e0.value == pytest.approx(math.exp(s) * lam ** (n - 1), rel=1e-12)
    from_plus = finite_mgf_lemma(coin, PLUS, 1, t, n)
    assert from_plus.value == pytest.approx(lam**n, rel=1e-12)
    brute = finite_mgf_bruteforce(coin, PLUS, 1, t, n)
    assert brute.value == pytest.approx(from_plus.value, rel=1e-12)


@pytest.mark.parametrize("m,n", [(1, 5), (2, 6), (3, 7), (2, 2)])
def test_mgf_lemma_matches_bruteforce(random_families, m, n):
    rng = np.random.default_rng(100 * m + n)
    for fam in random_families[:4]:
        t = rng.uniform(-1.0, 1.0, fam.k**m)
        psi = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        psi /= np.linalg.norm(psi)
        a = finite_mgf_lemma(fam, psi, m, t, n)
        b = finite_mgf_bruteforce(fam, psi, m, t, n)
        assert a.value == pytest.approx(b.value, rel=1e-11)
        assert a.log_value == pytest.approx(b.log_value, abs=1e-11)


def test_mgf_growth_rate_converges_to_scgf(random_families):
    # (1/n) log Gamma_n = F + C/n + o(1/n): the residual should roughly
    # halve when n doubles
    fam = random_families[0]
    rng = np.random.default_rng(17)
    t = rng.uniform(-0.5, 0.5, fam.k)
    F = scgf(fam, 1, t)
    err = []
    for n in (200, 400, 800):
        res = finite_mgf_lemma(fam, E0, 1, t, n)
        err.append(res.log_value / n - F)
    assert abs(err[1]) == pytest.approx(abs(err[0]) / 2, rel=0.2)
    assert abs(err[2]) == pytest.approx(abs(err[1]) / 2, rel=0.2)


def test_scgf_normalization_and_gradient(random_families):
    for fam in random_families[:6]:
        ev = ScgfEvaluator(fam, 2)
        K = fam.k**2
        assert ev.value(np.zeros(K)) == pytest.approx(0.0, abs=1e-12)
        npt.assert_allclose(ev.gradient(np.zeros(K)),
                            stationary_string_probabilities(fam, 2), atol=1e-9)


def test_scgf_gradient_matches_finite_difference(random_families):
    fam = random_families[5]
    ev = ScgfEvaluator(fam, 2)
    rng = np.random.default_rng(23)
    t = rng.uniform(-1.0, 1.0, fam.k**2)
    grad = ev.gradient(t)
    h = 1e-6
    for j in range(fam.k**2):
        e = np.zeros(fam.k**2)
        e[j] = h
        fd = (ev.value(t + e) - ev.value(t - e)) / (2 * h)
        assert grad[j] == pytest.approx(fd, abs=1e-7)


def test_scgf_coin_radius_is_omega_independent():
    # level-1 radius at t = (s, 0) is (e^s + 1)/2 for every omega in (0, pi)
    for omega in (0.3, 1.0, np.pi / 2, 2.6):
        fam = example_model("example2", omega)
        ev = ScgfEvaluator(fam, 1)
        for s in (-2.0, -0.5, 0.0, 1.0, 2.0):
            assert ev.value([s, 0.0]) == pytest.approx(math.log(coin_lambda(s)),
                                                       abs=1e-10)


def test_rate_function_vanishes_at_stationary_law(random_families):
    for fam in random_families[:3]:
        p = stationary_string_probabilities(fam, 1)
        pt = rate_function(fam, 1, p)
        assert pt.converged
        assert abs(pt.value) <= 1e-9


def test_rate_function_fair_coin_closed_form(coin):
    for x0 in np.linspace(0.1, 0.9, 9):
        pt = rate_function(coin, 1, [x0, 1.0 - x0])
        expected = math.log(2) + x0 * math.log(x0) + (1 - x0) * math.log(1 - x0)
        assert pt.converged
        assert pt.value == pytest.approx(expected, abs=1e-8)


def test_rate_function_simplex_vertex(coin):
    # the supremum at x = (1, 0) is log 2, approached along t_0 -> inf
    pt = rate_function(coin, 1, [1.0, 0.0])
    assert pt.value == pytest.approx(math.log(2), abs=1e-6)


def test_rate_function_duality(random_families):
    # at an interior optimum the tilt satisfies grad F(t*) = x
    fam = random_families[6]
    ev = ScgfEvaluator(fam, 1)
    x = np.array([0.55, 0.45]) if fam.k == 2 else np.array([0.5, 0.3, 0.2])
    pt = rate_function(fam, 1, x, evaluator=ev)
    assert pt.converged
    npt.assert_allclose(ev.gradient(pt.argmax_t.entries), x, atol=1e-7)
    assert pt.value == pytest.approx(
        float(pt.argmax_t.entries @ x) - ev.value(pt.argmax_t.entries), abs=1e-10)


def test_rate_function_rejects_off_simplex(coin):
    with pytest.raises(NotOnSimplex):
        rate_function(coin, 1, [0.7, 0.7])
    with pytest.raises(NotOnSimplex):
        rate_function(coin, 1, [1.2, -0.2])


def test_clt_moments_fair_coin(coin):
    mom = clt_moments(coin, 1)
    npt.assert_allclose(mom.mean, [0.5, 0.5], atol=1e-10)
    npt.assert_allclose(mom.covariance, [[0.25, -0.25], [-0.25, 0.25]],
                        atol=1e-7)


def test_clt_covariance_rows_sum_to_zero(random_families):
    # frequencies sum to one identically, so the covariance annihilates 1
    for fam in random_families[:5]:
        mom = clt_moments(fam, 2)
        assert mom.mean.sum() == pytest.approx(1.0, abs=1e-10)
        npt.assert_allclose(mom.covariance @ np.ones(fam.k**2), 0.0, atol=1e-6)
        npt.assert_allclose(mom.covariance, mom.covariance.T, atol=1e-10)


def test_clt_covariance_iid_benchmark(coin):
    # level-2 windows of an i.i.d. fair coin: the sliding-window CLT
    # covariance of indicator pairs has the closed form
    # cov(a, b) = p_ab (1{a=b} - p) + (overlap terms from lag-1 windows)
    mom = clt_moments(coin, 2)
    p = 0.25
    lag = np.zeros((4, 4))
    for a in range(4):
        for b in range(4):
            # lag-1 overlap: windows (a1 a2) and (b1 b2) with a2 == b1
            if a % 2 == b // 2:
                lag[a, b] += p / 2 - p * p
            else:
                lag[a, b] -= p * p
            if b % 2 == a // 2:
                lag[a, b] += p / 2 - p * p
            else:
                lag[a, b] -= p * p
    expected = np.diag([p] * 4) - np.full((4, 4), p * p) + lag
    npt.assert_allclose(mom.covariance, expected, atol=1e-6)


def test_tail_rate_bound_below_stationary_is_zero(coin):
    bound = tail_rate_bound(coin, 1, 0, 0.5)
    assert bound.value == 0.0
    assert bound.converged


def test_tail_rate_bound_matches_rate_function(coin):
    bound = tail_rate_bound(coin, 1, 0, 0.75)
    expected = math.log(2) + 0.75 * math.log(0.75) + 0.25 * math.log(0.25)
    assert bound.value == pytest.approx(expected, abs=1e-8)
    assert bound.x[0] == pytest.approx(0.75, abs=1e-6)


def test_tail_rate_bound_rejects_bad_threshold(coin):
    with pytest.raises(ParamOutOfRange):
        tail_rate_bound(coin, 1, 0, 1.0)
    with pytest.raises(ParamOutOfRange):
        tail_rate_bound(coin, 1, 0, 0.2)
