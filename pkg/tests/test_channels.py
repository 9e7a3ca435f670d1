import itertools
import json
import math

import numpy as np
import pytest

from ccqlab import channels, linalg, rng as rngmod
from ccqlab.errors import LengthMismatch, SizeMismatch
from conftest import random_cq, random_pmf


def test_average_output_examples(ortho, bb84):
    rho = np.diag([0.7, 0.3])
    np.testing.assert_allclose(channels.average_output(channels.constant_cq(rho, 3), channels.uniform(3)), rho)
    np.testing.assert_allclose(channels.average_output(ortho, [0.5, 0.5]), np.eye(2) / 2)
    w = linalg.eigvalsh(channels.average_output(bb84, [0.5, 0.5]))
    np.testing.assert_allclose(w, [0.8535533905932737, 0.14644660940672624], atol=1e-12)


def test_average_output_size_mismatch(ortho):
    with pytest.raises(SizeMismatch):
        channels.average_output(ortho, channels.uniform(3))


def test_average_output_is_affine(rng):
    d = random_cq(rng, k=3, dim=3)
    p1, p2, lam = random_pmf(rng, 3), random_pmf(rng, 3), 0.3
    mixed = channels.average_output(d, lam * p1 + (1 - lam) * p2)
    split = lam * channels.average_output(d, p1) + (1 - lam) * channels.average_output(d, p2)
    assert np.max(np.abs(mixed - split)) <= 1e-12


def test_d_nfold_examples(ortho, rng):
    d = random_cq(rng, k=2, dim=2)
    np.testing.assert_array_equal(channels.d_nfold(d, [1]), d.states[1])
    rho = linalg.random_density(2, rng)
    const = channels.constant_cq(rho)
    np.testing.assert_allclose(channels.d_nfold(const, [0, 1, 1]), linalg.tensor_power(rho, 3), atol=1e-15)
    ket01 = np.zeros(4)
    ket01[1] = 1
    np.testing.assert_array_equal(channels.d_nfold(ortho, [0, 1]), np.outer(ket01, ket01))


def test_d_nfold_matches_spectral_form(rng):
    d = random_cq(rng, k=3, dim=2)
    p = random_pmf(rng, 3)
    sk = channels.spectral_kernel(d, p)
    for word in itertools.product(range(3), repeat=2):
        a = channels.d_nfold(d, word)
        assert np.trace(a).real == pytest.approx(1.0, abs=1e-9)
        vals = np.kron(sk.eigenvalues[word[0]], sk.eigenvalues[word[1]])
        vecs = np.kron(sk.bases[word[0]], sk.bases[word[1]])
        np.testing.assert_allclose((vecs * vals) @ vecs.conj().T, a, atol=1e-9)


def test_product_output_reconstruction(rng):
    d = random_cq(rng, k=2, dim=2)
    p = random_pmf(rng, 2)
    sk = channels.spectral_kernel(d, p)
    dp = channels.average_output(d, p)
    for n in (1, 2, 3):
        vals, vecs = np.ones(1), np.ones((1, 1))
        for _ in range(n):
            vals, vecs = np.kron(vals, sk.output_spectrum), np.kron(vecs, sk.output_basis)
        np.testing.assert_allclose((vecs * vals) @ vecs.conj().T, linalg.tensor_power(dp, n), atol=1e-9)


def test_w_nfold_prob():
    ident = channels.identity_channel(3)
    assert channels.w_nfold_prob(ident, [0, 2, 1], [0, 2, 1]) == 1.0
    assert channels.w_nfold_prob(ident, [0, 2, 1], [0, 2, 2]) == 0.0
    assert channels.w_nfold_prob(channels.bsc(0.1), [0, 1], [0, 0]) == pytest.approx(0.09)
    with pytest.raises(LengthMismatch):
        channels.w_nfold_prob(ident, [0, 1], [0])


def test_spectral_kernel_examples(ortho, bb84):
    sk = channels.spectral_kernel(ortho, [0.5, 0.5])
    np.testing.assert_array_equal(sk.eigenvalues, [[1, 0], [1, 0]])
    sk = channels.spectral_kernel(channels.constant_cq(np.diag([0.7, 0.3])), [0.5, 0.5])
    np.testing.assert_allclose(sk.eigenvalues, [[0.7, 0.3], [0.7, 0.3]])
    np.testing.assert_allclose(sk.output_spectrum, [0.7, 0.3])
    sk = channels.spectral_kernel(bb84, [0.5, 0.5])
    np.testing.assert_allclose(sk.eigenvalues, [[1, 0], [1, 0]], atol=1e-14)
    np.testing.assert_allclose(sk.output_spectrum, [0.8535533905932737, 0.14644660940672624], atol=1e-12)


def test_spectral_kernel_invariants(rng):
    for _ in range(20):
        d = random_cq(rng)
        sk = channels.spectral_kernel(d, random_pmf(rng, d.input_size))
        np.testing.assert_allclose(sk.eigenvalues.sum(axis=1), 1.0, atol=1e-10)
        assert np.all(sk.eigenvalues >= -1e-10) and np.all(sk.eigenvalues <= 1 + 1e-10)
        assert np.all(np.diff(sk.eigenvalues, axis=1) <= 0)
        assert sk.output_spectrum.sum() == pytest.approx(1.0, abs=1e-10)
        for v in list(sk.bases) + [sk.output_basis]:
            np.testing.assert_allclose(v.conj().T @ v, np.eye(d.dim), atol=1e-10)


def test_sample_word():
    g = rngmod.stream(1, 0, "t")
    np.testing.assert_array_equal(channels.sample_word([0, 1, 0], 7, g), np.ones(7))
    a = channels.sample_word([0.3, 0.7], 50, rngmod.stream(5, 2, "t"))
    b = channels.sample_word([0.3, 0.7], 50, rngmod.stream(5, 2, "t"))
    np.testing.assert_array_equal(a, b)
    big = channels.sample_word([0.5, 0.5], 10 ** 5, rngmod.stream(9, 0, "t"))
    assert abs(np.mean(big == 0) - 0.5) <= 3 * math.sqrt(0.25 / 10 ** 5)


def test_sample_word_never_emits_zero_mass_symbol():
    g = rngmod.stream(3, 0, "t")
    w = channels.sample_word([0.5, 0.5, 0.0], 10 ** 4, g)
    assert w.max() <= 1


def test_transmit_statistics():
    w = channels.bsc(0.2)
    out = w.transmit(np.zeros(20000, dtype=int), rngmod.stream(4, 0, "t"))
    assert abs(out.mean() - 0.2) <= 3 * math.sqrt(0.16 / 20000)
    np.testing.assert_array_equal(channels.identity_channel(3).transmit([2, 0, 1], rngmod.stream(4)), [2, 0, 1])


def test_json_round_trip(tmp_path, rng):
    d = random_cq(rng, k=3, dim=3)
    path = tmp_path / "d.json"
    channels.save_channel(d, path)
    back = channels.load_channel(path)
    np.testing.assert_array_equal(back.states, d.states)
    w = channels.bsc(0.05)
    back = channels.channel_from_json(json.loads(json.dumps(w.to_json())))
    np.testing.assert_array_equal(back.kernel, w.kernel)


def test_invalid_channels():
    with pytest.raises(ValueError):
        channels.ClassicalChannel(np.array([[0.5, 0.4]]))
    with pytest.raises(ValueError):
        channels.CqChannel(np.stack([np.eye(2)]))
    with pytest.raises(KeyError):
        channels.cq_preset("nope")


def test_presets():
    assert channels.cq_preset("depolarized pair", q=0.2).states[0][0, 0] == pytest.approx(0.9)
    assert channels.cq_preset("bb84_pair").dim == 2
    assert channels.classical_preset("bsc", p=0.3).kernel[0, 1] == pytest.approx(0.3)
