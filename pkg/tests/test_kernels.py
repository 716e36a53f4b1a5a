"""Markov-kernel learning and the kernel metric."""

import numpy as np
import pytest

from qfep import (
    MarkovKernel,
    bit_alphabet,
    estimate_kernel,
    kernel_distance,
    learn_sequence,
    learn_update,
    simulate_chain,
    stream,
)


def random_kernel(rng, k):
    mat = rng.random((k, k)) + 0.05
    mat /= mat.sum(axis=1, keepdims=True)
    return MarkovKernel(tuple(f"s{i}" for i in range(k)), mat)


class TestMarkovKernel:
    def test_rows_must_be_stochastic(self):
        with pytest.raises(ValueError, match="sum to 1"):
            MarkovKernel(("a", "b"), np.array([[0.5, 0.4], [0.5, 0.5]]))

    def test_entries_bounded(self):
        with pytest.raises(ValueError):
            MarkovKernel(("a", "b"), np.array([[1.5, -0.5], [0.5, 0.5]]))

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError):
            MarkovKernel(("a", "a"), np.eye(2))

    def test_json_roundtrip(self):
        k = random_kernel(np.random.default_rng(0), 3)
        again = MarkovKernel.from_json(k.to_json())
        assert again.alphabet == k.alphabet
        np.testing.assert_array_equal(again.matrix, k.matrix)

    def test_bit_alphabet(self):
        assert bit_alphabet(2) == ("00", "01", "10", "11")


class TestLearnUpdate:
    def test_pure_prior_is_uniform(self):
        model = MarkovKernel.uniform(("0", "1"))
        np.testing.assert_allclose(model.matrix, 0.5)

    def test_first_observation_with_unit_smoothing(self):
        model = MarkovKernel.uniform(("0", "1"))
        model = learn_update(model, "0", "1", smoothing=1.0)
        np.testing.assert_allclose(model.row("0"), [1 / 3, 2 / 3])
        np.testing.assert_allclose(model.row("1"), [0.5, 0.5])

    def test_alphabet_extension(self):
        model = MarkovKernel.uniform(("0", "1"))
        model = learn_update(model, "0", "2", smoothing=1.0)
        assert model.alphabet == ("0", "1", "2")
        np.testing.assert_allclose(model.row("1"), [1 / 3, 1 / 3, 1 / 3])
        np.testing.assert_allclose(model.row("0"), [0.25, 0.25, 0.5])

    def test_convergence_to_known_kernel(self):
        truth = MarkovKernel(("0", "1"), np.array([[0.8, 0.2], [0.4, 0.6]]))
        records = simulate_chain(truth, "0", 10_000, stream(1, "chain"))
        model = learn_sequence(MarkovKernel.uniform(("0", "1")), records,
                               smoothing=1.0)
        per_row_tv = 0.5 * np.abs(model.matrix - truth.matrix).sum(axis=1)
        assert per_row_tv.max() < 0.05

    def test_learn_sequence_matches_estimate(self):
        truth = random_kernel(np.random.default_rng(2), 3)
        records = simulate_chain(truth, "s0", 500, stream(2, "chain"))
        incremental = learn_sequence(
            MarkovKernel.uniform(truth.alphabet), records, smoothing=1.0)
        batch = estimate_kernel(records, truth.alphabet, smoothing=1.0)
        np.testing.assert_allclose(incremental.matrix, batch.matrix, atol=1e-12)


class TestKernelDistance:
    def test_identity_of_indiscernibles(self):
        k = random_kernel(np.random.default_rng(3), 4)
        assert kernel_distance(k, k) == 0.0

    def test_disjoint_supports(self):
        ident = MarkovKernel.identity(("0", "1"))
        flip = MarkovKernel(("0", "1"), np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert kernel_distance(ident, flip) == pytest.approx(1.0)

    def test_uniform_vs_identity(self):
        uniform = MarkovKernel.uniform(("0", "1"))
        ident = MarkovKernel.identity(("0", "1"))
        assert kernel_distance(uniform, ident) == pytest.approx(0.5)

    def test_alphabet_mismatch(self):
        with pytest.raises(ValueError, match="alphabet"):
            kernel_distance(MarkovKernel.uniform(("0", "1")),
                            MarkovKernel.uniform(("a", "b")))

    def test_metric_axioms_on_random_triples(self):
        rng = np.random.default_rng(4)
        for _ in range(1000):
            a, b, c = (random_kernel(rng, 3) for _ in range(3))
            dab = kernel_distance(a, b)
            dba = kernel_distance(b, a)
            assert dab == dba
            assert 0.0 <= dab <= 1.0
            assert kernel_distance(a, c) <= dab + kernel_distance(b, c) + 1e-12


class TestChainSimulation:
    def test_deterministic_given_stream(self):
        truth = random_kernel(np.random.default_rng(5), 3)
        a = simulate_chain(truth, "s0", 100, stream(6, "sim"))
        b = simulate_chain(truth, "s0", 100, stream(6, "sim"))
        assert a == b

    def test_point_mass_rows_are_deterministic(self):
        cyc = MarkovKernel(("a", "b"), np.array([[0.0, 1.0], [1.0, 0.0]]))
        chain = simulate_chain(cyc, "a", 6, stream(7, "sim"))
        assert chain == ["a", "b", "a", "b", "a", "b", "a"]
