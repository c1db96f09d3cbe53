import math

import numpy as np
import numpy.testing as npt
import pytest

from qmcstats import (
    ParamOutOfRange,
    ParseError,
    empirical_measure,
    example_model,
    ld_tail_estimate,
    monte_carlo_clt,
    rle_decode,
    rle_encode,
    sample_trajectory,
    stationary_string_probabilities,
    trajectory_seed,
    window_codes,
)
from qmcstats.trajectory import _simulate_batch

E0 = np.array([1.0, 0.0], dtype=complex)


def test_trivial_process_emits_constant_record():
    # delta = 0 from |0>: V_1 = |0><0| fires every step
    fam = example_model("example1", 0.0)
    tr = sample_trajectory(fam, E0, 200, seed=1)
    assert np.all(tr.outcomes == 1)
    npt.assert_allclose(tr.final_state, E0, atol=1e-12)


def test_cyclic_process_alternates():
    # delta = 1 from |0>: V_1 = |1><0| then V_0 = |0><1|, strictly periodic
    fam = example_model("example1", 1.0)
    tr = sample_trajectory(fam, E0, 100, seed=3)
    npt.assert_array_equal(tr.outcomes, np.tile([1, 0], 50))


def test_reproducibility_and_seed_derivation(coin):
    a = sample_trajectory(coin, E0, 500, seed=99)
    b = sample_trajectory(coin, E0, 500, seed=99)
    npt.assert_array_equal(a.outcomes, b.outcomes)
    assert a.model_digest == coin.digest()
    assert trajectory_seed(10, 5) == 15
    assert trajectory_seed(2**64 - 1, 2) == 1  # wraps mod 2^64


def test_batched_equals_serial(coin):
    seeds = np.array([trajectory_seed(7, i) for i in range(6)], dtype=np.uint64)
    batch = _simulate_batch(coin, E0, 64, seeds)
    for b, seed in enumerate(seeds):
        single = sample_trajectory(coin, E0, 64, int(seed))
        npt.assert_array_equal(batch[b], single.outcomes)


def test_coin_outcome_frequencies(coin):
    # level-1 law is a fair coin; a 4-sigma band on 4000 draws
    tr = sample_trajectory(coin, E0, 4000, seed=11)
    freq = tr.outcomes.mean()
    assert abs(freq - 0.5) <= 4 * 0.5 / math.sqrt(4000)


def test_window_codes_big_endian():
    codes = window_codes(np.array([1, 0, 2, 1]), 2, 3)
    npt.assert_array_equal(codes, [3, 2, 7])


def test_empirical_measure_by_hand():
    em = empirical_measure([0, 1, 0, 0], 2, 2)
    npt.assert_array_equal(em.counts, [1, 1, 1, 0])
    npt.assert_allclose(em.frequencies, [1 / 3, 1 / 3, 1 / 3, 0.0])
    assert em.n == 4 and em.m == 2


def test_short_record_law_matches_output_distribution(xyz_third):
    # the full-string law P(i_1 .. i_n) = ||V_{i_n} ... V_{i_1} psi||^2 is
    # the zero-tilt amplitude tree; compare against sampled records
    n, trials = 3, 40000
    seeds = np.array([trajectory_seed(1234, i) for i in range(trials)],
                     dtype=np.uint64)
    outcomes = _simulate_batch(xyz_third, E0, n, seeds)
    codes = window_codes(outcomes, n, 2).reshape(-1)
    counts = np.bincount(codes, minlength=8)
    # exact finite-n law via the gradient of the brute-force MGF is overkill;
    # enumerate directly
    probs = np.empty(8)
    for code in range(8):
        i3, i2, i1 = code % 2, (code // 2) % 2, code // 4
        W = (xyz_third.kraus[i3] @ xyz_third.kraus[i2] @ xyz_third.kraus[i1])
        probs[code] = np.linalg.norm(W @ E0) ** 2
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)
    for code in range(8):
        se = math.sqrt(probs[code] * (1 - probs[code]) / trials)
        assert abs(counts[code] / trials - probs[code]) <= 4 * se + 1e-12


def test_sliding_window_marginal_consistency(xyz_third):
    tr = sample_trajectory(xyz_third, E0, 300, seed=21)
    em1 = empirical_measure(tr.outcomes, 1, 2)
    em2 = empirical_measure(tr.outcomes, 2, 2)
    marg = em2.frequencies.reshape(2, 2).sum(axis=1)
    # windows differ only at the record edge
    npt.assert_allclose(marg, em1.frequencies, atol=1.0 / (300 - 1) + 1e-12)


def test_law_of_large_numbers(xyz_third):
    p = stationary_string_probabilities(xyz_third, 1)
    errs = []
    for n in (400, 1600, 6400):
        tr = sample_trajectory(xyz_third, E0, n, seed=5)
        em = empirical_measure(tr.outcomes, 1, 2)
        errs.append(np.abs(em.frequencies - p).max())
    # error roughly halves when n quadruples; allow generous noise
    assert errs[2] <= errs[0]


def test_monte_carlo_clt_sanity(coin):
    res = monte_carlo_clt(coin, E0, 1, 400, 300, base_seed=7)
    assert res.z_scores.shape == (2,)
    assert np.abs(res.z_scores).max() < 5.0
    npt.assert_allclose(res.sample_covariance @ np.ones(2), 0.0, atol=1e-8)
    npt.assert_allclose(res.sample_covariance, res.analytic.covariance,
                        atol=0.25)


def test_monte_carlo_clt_needs_enough_trials(coin):
    with pytest.raises(ParamOutOfRange):
        monte_carlo_clt(coin, E0, 1, 100, 50, base_seed=1)


def test_rle_round_trip():
    rec = np.array([0, 0, 0, 1, 1, 0, 2, 2, 2, 2])
    text = rle_encode(rec)
    assert text == "0*3 1*2 0*1 2*4"
    npt.assert_array_equal(rle_decode(text), rec)
    assert rle_encode([]) == ""
    assert rle_decode("").size == 0
    with pytest.raises(ParseError):
        rle_decode("0*3 nonsense")


def test_ld_tail_estimate_structure(coin):
    est = ld_tail_estimate(coin, E0, 1, 0, 0.65, (30, 60), 4000, base_seed=3)
    assert est.analytic.value == pytest.approx(
        math.log(2) + 0.65 * math.log(0.65) + 0.35 * math.log(0.35), abs=1e-8)
    assert [pt.n for pt in est.points] == [30, 60]
    for pt in est.points:
        assert 0 <= pt.hits <= pt.trials
        assert pt.wilson_low <= pt.frequency <= pt.wilson_high
        if pt.hits:
            # finite-n rates upper-bound the asymptotic rate here
            assert pt.rate >= est.analytic.value
            assert pt.rate_low <= pt.rate <= pt.rate_high


def test_ld_tail_estimate_at_stationary_threshold(coin):
    # a at the stationary value: the analytic bound degenerates to zero
    est = ld_tail_estimate(coin, E0, 1, 0, 0.5, (40,), 2000, base_seed=9)
    assert est.analytic.value == 0.0


def test_ld_tail_estimate_rejects_unreachable_threshold(coin):
    with pytest.raises(ParamOutOfRange):
        ld_tail_estimate(coin, E0, 1, 0, 0.3, (40,), 1000, base_seed=1)
