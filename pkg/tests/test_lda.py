import numpy as np
import pytest

from helpers import block_topics, draw_corpus, greedy_cosine_match
from topicstream import kernels, lda
from topicstream.errors import ConfigError
from topicstream.preprocess import ProcessedDoc


def uniform_priors(n_topics, vocab_size, alpha=0.5, base_beta=0.01):
    return lda.PriorSpec(alpha, np.full((n_topics, vocab_size), base_beta))


class TestPriorSpec:
    def test_rejects_nonpositive(self):
        with pytest.raises(ConfigError):
            lda.PriorSpec(0.0, np.ones((2, 3)))
        with pytest.raises(ConfigError):
            lda.PriorSpec(0.5, np.zeros((2, 3)))


class TestInitState:
    def test_count_conservation(self):
        docs = [ProcessedDoc("d", list(range(10)))]
        state = lda.init_state(docs, uniform_priors(5, 10), seed=0)
        assert state.n_dk.sum() == 10
        assert int(state.n_dk[0].sum()) == 10
        state.validate()

    def test_same_seed_same_assignments(self):
        docs = [ProcessedDoc("d", [0, 1, 2, 3])]
        a = lda.init_state(docs, uniform_priors(4, 4), seed=9)
        b = lda.init_state(docs, uniform_priors(4, 4), seed=9)
        assert np.array_equal(a.z, b.z)

    def test_zero_length_doc_ok(self):
        docs = [ProcessedDoc("e", []), ProcessedDoc("d", [0, 1])]
        state = lda.init_state(docs, uniform_priors(3, 2), seed=0)
        assert state.n_tokens == 2
        assert state.doc_lengths[0] == 0
        state.validate()

    def test_k_below_two_fatal(self):
        docs = [ProcessedDoc("d", [0])]
        with pytest.raises(ConfigError):
            lda.init_state(docs, uniform_priors(1, 2), seed=0)

    def test_empty_corpus_fatal(self):
        with pytest.raises(ConfigError):
            lda.init_state([], uniform_priors(3, 2), seed=0)
        with pytest.raises(ConfigError):
            lda.init_state([ProcessedDoc("e", [])], uniform_priors(3, 2), seed=0)


class TestGibbsSweep:
    def test_invariants_hold_every_sweep(self):
        rng = np.random.default_rng(4)
        docs = [ProcessedDoc(str(d), rng.integers(0, 12, size=8).tolist())
                for d in range(5)]
        priors = uniform_priors(4, 12)
        state = lda.init_state(docs, priors, seed=1)
        for _ in range(20):
            lda.gibbs_sweep(state, priors)
            state.validate()

    def test_single_topic_kernel_is_forced(self):
        # with K=1 the sweep has nowhere to move mass: all z stay 0 and
        # the posterior word distribution equals empirical frequencies
        word_of = np.array([0, 1, 1, 2, 2, 2], dtype=np.int32)
        n = word_of.shape[0]
        z = np.zeros(n, dtype=np.int32)
        doc_of = np.zeros(n, dtype=np.int32)
        n_dk = np.array([[n]], dtype=np.int32)
        n_kw = np.array([[1, 2, 3]], dtype=np.int32)
        n_k = np.array([n], dtype=np.int32)
        beta = np.full((1, 3), 1e-9)
        kernels.sweep(z, doc_of, word_of, n_dk, n_kw, n_k, 0.5, beta,
                      beta.sum(axis=1), np.random.default_rng(0).random(n))
        assert np.all(z == 0)
        phi_row = (n_kw[0] + beta[0]) / (n_k[0] + beta[0].sum())
        assert np.allclose(phi_row, [1 / 6, 2 / 6, 3 / 6], atol=1e-8)


class TestEstimates:
    def test_phi_prior_only_uniform(self):
        docs = [ProcessedDoc("d", [0, 1])]
        priors = uniform_priors(3, 4, base_beta=0.2)
        state = lda.init_state(docs, priors, seed=0)
        state.n_kw[:] = 0
        state.n_k[:] = 0
        phi = lda.estimate_phi(state, priors)
        assert np.allclose(phi, 0.25)

    def test_phi_arithmetic(self):
        docs = [ProcessedDoc("d", [0, 1])]
        priors = lda.PriorSpec(0.5, np.ones((2, 2)))
        state = lda.init_state(docs, priors, seed=0)
        state.n_kw = np.array([[3, 1], [0, 0]], dtype=np.int32)
        state.n_k = np.array([4, 0], dtype=np.int32)
        phi = lda.estimate_phi(state, priors)
        assert np.allclose(phi[0], [4 / 6, 2 / 6])

    def test_phi_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        docs = [ProcessedDoc(str(d), rng.integers(0, 9, size=6).tolist())
                for d in range(4)]
        priors = uniform_priors(3, 9)
        state = lda.init_state(docs, priors, seed=0)
        phi = lda.estimate_phi(state, priors)
        assert np.allclose(phi.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(phi > 0)

    def test_theta_empty_doc_uniform(self):
        docs = [ProcessedDoc("e", []), ProcessedDoc("d", [0])]
        priors = uniform_priors(4, 2, alpha=0.1)
        state = lda.init_state(docs, priors, seed=0)
        theta = lda.estimate_theta(state, 0.1)
        assert np.allclose(theta[0], [0.25, 0.25, 0.25, 0.25])

    def test_theta_one_hot_at_zero_alpha(self):
        docs = [ProcessedDoc("d", [0] * 8)]
        priors = uniform_priors(4, 1)
        state = lda.init_state(docs, priors, seed=0)
        state.z[:] = 2
        state.n_dk = np.array([[0, 0, 8, 0]], dtype=np.int32)
        theta = lda.estimate_theta(state, 0.0)
        assert np.allclose(theta[0], [0, 0, 1, 0])

    def test_theta_arithmetic(self):
        docs = [ProcessedDoc("d", [0] * 4)]
        priors = uniform_priors(2, 1)
        state = lda.init_state(docs, priors, seed=0)
        state.n_dk = np.array([[3, 1]], dtype=np.int32)
        theta = lda.estimate_theta(state, 0.5)
        assert np.allclose(theta[0], [0.7, 0.3])


class TestTrain:
    def test_single_sample_estimate_valid(self):
        rng = np.random.default_rng(1)
        docs = [ProcessedDoc(str(d), rng.integers(0, 7, size=5).tolist())
                for d in range(3)]
        phi, theta = lda.train(docs, uniform_priors(3, 7), n_sweeps=6,
                               burn_in=5, seed=0, sample_lag=10)
        assert np.allclose(phi.sum(axis=1), 1.0, atol=1e-9)
        assert np.allclose(theta.sum(axis=1), 1.0, atol=1e-9)

    def test_fixed_seed_bitwise_reproducible(self):
        rng = np.random.default_rng(2)
        docs = [ProcessedDoc(str(d), rng.integers(0, 11, size=9).tolist())
                for d in range(6)]
        priors = uniform_priors(4, 11)
        phi1, theta1 = lda.train(docs, priors, 30, 10, seed=5, sample_lag=5)
        phi2, theta2 = lda.train(docs, priors, 30, 10, seed=5, sample_lag=5)
        assert np.array_equal(phi1, phi2)
        assert np.array_equal(theta1, theta2)

    def test_sweep_budget_validated(self):
        docs = [ProcessedDoc("d", [0, 1])]
        with pytest.raises(ConfigError):
            lda.train(docs, uniform_priors(2, 2), n_sweeps=5, burn_in=5, seed=0)

    def test_prior_dominance(self):
        rng = np.random.default_rng(3)
        docs = [ProcessedDoc(str(d), rng.integers(0, 8, size=10).tolist())
                for d in range(5)]
        beta = np.full((3, 8), 0.01)
        strong_row = rng.random(8) + 0.1
        beta[1] = strong_row * 1e6
        priors = lda.PriorSpec(0.5, beta)
        state = lda.init_state(docs, priors, seed=0)
        phi = lda.estimate_phi(state, priors)
        expected = strong_row / strong_row.sum()
        assert np.max(np.abs(phi[1] - expected)) < 1e-3

    def test_recovers_separated_topics(self):
        topics = block_topics(3, 30)
        docs = draw_corpus(topics, n_docs=150, doc_length=40, seed=7)
        phi, _ = lda.train(docs, uniform_priors(3, 30, alpha=0.5), n_sweeps=150,
                           burn_in=100, seed=7, sample_lag=10)
        cosines = greedy_cosine_match(phi, topics)
        assert np.mean(cosines) >= 0.8


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        docs = [ProcessedDoc(str(d), rng.integers(0, 6, size=5).tolist())
                for d in range(3)]
        priors = uniform_priors(2, 6)
        phi, theta = lda.train(docs, priors, 10, 5, seed=1, sample_lag=2)
        path = tmp_path / "model.npz"
        lda.save_checkpoint(path, phi, theta, priors, seed=1, n_sweeps=10)
        loaded = lda.load_checkpoint(path)
        assert loaded["n_topics"] == 2 and loaded["vocab_size"] == 6
        assert np.array_equal(loaded["phi"], phi)
        assert np.array_equal(loaded["theta"], theta)
        assert loaded["seed"] == 1
