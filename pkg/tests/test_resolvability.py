import math

import numpy as np
import pytest

from ccqlab import channels, linalg, resolvability as res, rng as rngmod
from ccqlab.errors import BudgetExceeded, EnumerationBudgetExceeded, NoPositiveExponent, RateTooLow
from ccqlab.measures import holevo_information
from conftest import random_cq, random_pmf

HALF = [0.5, 0.5]


def test_sample_codebook():
    cb = res.sample_codebook([0, 0, 1], 4, 6, rngmod.stream(1))
    assert cb.words.shape == (6, 4) and np.all(cb.words == 2)
    a = res.sample_codebook(HALF, 5, 3, rngmod.stream(2, 1, "x"))
    b = res.sample_codebook(HALF, 5, 3, rngmod.stream(2, 1, "x"))
    np.testing.assert_array_equal(a.words, b.words)
    big = res.sample_codebook(HALF, 100, 100, rngmod.stream(3))
    assert abs(big.words.mean() - 0.5) <= 3 * math.sqrt(0.25 / 10 ** 4)


def test_codebook_size():
    assert res.codebook_size(2, math.log(3) / 2) == 3
    assert res.codebook_size(4, 1.5 * math.log(2)) == 64
    assert res.codebook_size(3, 0.1) == 2


def test_codebook_output_examples(ortho, rng):
    rho = linalg.random_density(2, rng)
    const = channels.constant_cq(rho)
    cb = res.Codebook([[0, 1], [1, 1]])
    np.testing.assert_allclose(res.codebook_output(const, cb), linalg.tensor_power(rho, 2), atol=1e-15)
    d = random_cq(rng, k=2, dim=2)
    np.testing.assert_allclose(res.codebook_output(d, res.Codebook([[1, 0]])), channels.d_nfold(d, [1, 0]),
                               atol=1e-15)
    np.testing.assert_allclose(res.codebook_output(ortho, res.Codebook([[0], [1]])), np.eye(2) / 2)


def test_resolvability_distance_examples(ortho):
    const = channels.constant_cq(np.diag([0.6, 0.4]))
    assert res.resolvability_distance(const, HALF, res.Codebook([[0, 0, 1]])) == pytest.approx(0, abs=1e-9)
    assert res.resolvability_distance(ortho, HALF, res.Codebook([[0]])) == pytest.approx(1.0)
    assert res.resolvability_distance(ortho, HALF, res.Codebook([[0], [1]])) == pytest.approx(0.0, abs=1e-15)


def test_distance_range(rng):
    d = random_cq(rng, k=3, dim=2)
    p = random_pmf(rng, 3)
    r = res.distance_trials(d, p, 3, 4, 50, seed=11)
    assert np.all(r.distances >= 0) and np.all(r.distances <= 2)
    assert r.distances.min() <= r.mean <= r.distances.max()


def test_exact_ensemble_mean_is_product(rng):
    d = random_cq(rng, k=3, dim=2)
    p = random_pmf(rng, 3)
    for n, m in ((1, 3), (2, 2), (3, 1)):
        mean = res.expected_codebook_output_exact(d, p, n, m)
        assert np.max(np.abs(mean - res.product_output(d, p, n))) <= 1e-10
    with pytest.raises(EnumerationBudgetExceeded):
        res.expected_codebook_output_exact(d, p, 4, 4)


def test_exponent_constant_half():
    half = channels.constant_cq(np.eye(2) / 2)
    comps = res.lemma5_exponents(math.log(2), math.log(2), lambda a: math.log(2), lambda a: math.log(2),
                                 0.05, (2.0, 0.5, 2.0, 0.5))
    assert comps[0] == pytest.approx(0.05)
    np.testing.assert_allclose(comps, [0.05, 0.025, 0.05, 0.025])
    rep = res.theoretical_exponent(half, HALF, 1.0, epsilon=0.05, alphas=(2.0, 0.5, 2.0, 0.5))
    assert rep.components[0] == pytest.approx(0.05)
    assert rep.gamma1 == pytest.approx(0.025)
    assert rep.gamma == pytest.approx(min(0.025, 0.5 * (1.0 - 0.2)))


def test_exponent_rate_too_low(bb84):
    i = holevo_information(bb84, HALF)
    eps = 0.05
    with pytest.raises(RateTooLow):
        res.theoretical_exponent(bb84, HALF, i + 4 * eps, epsilon=eps)
    with pytest.raises(RateTooLow):
        res.theoretical_exponent(bb84, HALF, i - 0.1)


def test_exponent_bb84_positive(bb84):
    rep = res.theoretical_exponent(bb84, HALF, 0.9, epsilon=0.1)
    assert rep.gamma > 0
    assert rep.alphas[0] > 1 and 0 < rep.alphas[1] < 1
    assert rep.gamma <= 0.5 * (0.9 - rep.holevo - 0.4) + 1e-15


def test_exponent_default_epsilon(ortho):
    rep = res.theoretical_exponent(ortho, HALF, 1.5 * math.log(2))
    assert rep.epsilon == pytest.approx(0.5 * math.log(2) / 8)


def test_exponent_components_positive_on_random(rng):
    # for small eps the chosen alphas close to 1 keep every component positive
    for _ in range(10):
        d = random_cq(rng, k=2, dim=3)
        p = random_pmf(rng, 2)
        rep = res.theoretical_exponent(d, p, holevo_information(d, p) + 1.0, epsilon=0.2)
        assert min(rep.components) > 0


def test_no_positive_exponent(rng):
    d = random_cq(rng, k=2, dim=3)
    with pytest.raises(NoPositiveExponent):
        res.theoretical_exponent(d, HALF, 10.0, epsilon=1e-6, alphas=(3.0, 0.5, 3.0, 0.5))


def test_estimate_expected_distance_constant():
    const = channels.constant_cq(np.diag([0.8, 0.2]))
    r = res.estimate_expected_distance(const, HALF, 3, 0.5, trials=20, seed=1)
    assert r.mean == pytest.approx(0.0, abs=1e-9)
    assert r.m_size == res.codebook_size(3, 0.5)
    with pytest.raises(BudgetExceeded):
        res.estimate_expected_distance(const, HALF, 30, 1.0, trials=2, seed=1)


def test_distance_decreases_in_m(ortho):
    r = [res.distance_trials(ortho, HALF, 3, m, 100, seed=5) for m in (1, 2, 4, 8, 16, 32)]
    for a, b in zip(r, r[1:]):
        assert b.mean <= a.mean + 2 * math.hypot(a.std_error, b.std_error)


def test_trials_reproducible_and_thread_invariant(bb84):
    a = res.distance_trials(bb84, HALF, 3, 4, 30, seed=99)
    b = res.distance_trials(bb84, HALF, 3, 4, 30, seed=99, workers=3)
    np.testing.assert_array_equal(a.distances, b.distances)
    assert a.seeds == b.seeds
    one = res.sample_codebook(HALF, 3, 4, rngmod.stream_from_seed(a.seeds[7]))
    assert res.resolvability_distance(bb84, HALF, one) == a.distances[7]


def test_summary_fields(ortho):
    r = res.estimate_expected_distance(ortho, HALF, 2, 1.5 * math.log(2), trials=10, seed=3)
    s = r.summary()
    assert set(s) >= {"mean", "std_error", "theoretical_exponent", "epsilon", "alphas"}
    assert s["theoretical_exponent"] > 0
    rows = list(r.rows())
    assert set(rows[0]) == {"trial", "seed", "n", "M", "distance"}


def test_concentration_constant():
    const = channels.constant_cq(np.eye(2) / 2)
    rep = res.concentration_experiment(const, HALF, 2, 4, 100, (0.25, 0.5), seed=1)
    assert rep.frequencies == (0.0, 0.0) and rep.passed
    with pytest.raises(ValueError):
        res.concentration_experiment(const, HALF, 2, 4, 50, (0.25,), seed=1)


def test_bounded_differences_random(rng):
    d = random_cq(rng, k=3, dim=2)
    rep = res.bounded_difference_check(d, random_pmf(rng, 3), 3, 5, 40, seed=4)
    assert rep.passed and rep.bound == pytest.approx(0.4)
