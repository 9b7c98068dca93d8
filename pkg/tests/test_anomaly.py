import math

import numpy as np
import pytest

from oracles import js_brute, kl_brute, quartile_threshold_brute
from topicstream.anomaly import (LN2, DivergenceReport, detect, js_divergence,
                                 kl_divergence, mad_threshold,
                                 outlier_threshold)


def random_simplex(rng, n):
    x = rng.random(n) + 1e-9
    return x / x.sum()


class TestKl:
    def test_identity(self):
        p = np.array([0.2, 0.3, 0.5])
        assert kl_divergence(p, p) == 0.0

    def test_arithmetic(self):
        assert kl_divergence([0.5, 0.5], [0.25, 0.75]) == \
            pytest.approx(0.14384103622589042, abs=1e-12)
        assert kl_divergence([0.5, 0.5], [0.25, 0.75]) == \
            pytest.approx(kl_brute([0.5, 0.5], [0.25, 0.75]))

    def test_point_mass_against_uniform(self):
        assert kl_divergence([1, 0], [0.5, 0.5]) == pytest.approx(LN2, abs=1e-12)

    def test_dimension_mismatch_fatal(self):
        with pytest.raises(ValueError):
            kl_divergence([0.5, 0.5], [1.0])

    def test_zero_q_with_positive_p_fatal(self):
        with pytest.raises(ValueError):
            kl_divergence([0.5, 0.5], [1.0, 0.0])

    def test_zero_p_convention(self):
        assert kl_divergence([0.0, 1.0], [0.5, 0.5]) == pytest.approx(LN2)

    def test_nonnegative_with_equality_iff_equal(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            p = random_simplex(rng, 6)
            q = random_simplex(rng, 6)
            d = kl_divergence(p, q)
            assert d >= 0
            if d < 1e-12:
                assert np.allclose(p, q, atol=1e-5)


class TestJs:
    def test_identity(self):
        p = np.array([0.1, 0.9])
        assert js_divergence(p, p) == 0.0

    def test_disjoint_support_hits_ln2(self):
        assert js_divergence([1, 0], [0, 1]) == pytest.approx(LN2, abs=1e-12)

    def test_symmetry_and_bounds(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            p = random_simplex(rng, 8)
            q = random_simplex(rng, 8)
            a = js_divergence(p, q)
            assert a == pytest.approx(js_divergence(q, p), abs=1e-14)
            assert -1e-12 <= a <= LN2 + 1e-12
            assert a == pytest.approx(js_brute(p.tolist(), q.tolist()), abs=1e-12)


class TestOutlierThreshold:
    def test_interpolated_quartiles(self):
        values = [0.01, 0.012, 0.015, 0.02, 0.5]
        assert outlier_threshold(values) == pytest.approx(0.032, abs=1e-12)
        assert outlier_threshold(values) == \
            pytest.approx(quartile_threshold_brute(values))

    def test_all_equal_threshold_and_no_flags(self):
        values = [0.3, 0.3, 0.3, 0.3, 0.3]
        assert outlier_threshold(values) == pytest.approx(0.3)
        assert not np.any(np.asarray(values) > outlier_threshold(values))

    def test_small_k_guard(self):
        assert outlier_threshold([0.1, 0.9]) == math.inf
        assert mad_threshold([0.1, 0.9, 0.5]) == math.inf

    def test_mad_rule(self):
        values = [1.0, 1.1, 0.9, 1.05, 10.0]
        med = np.median(values)
        mad = np.median(np.abs(np.asarray(values) - med))
        assert mad_threshold(values) == pytest.approx(med + 3 * mad)


class TestDetect:
    def test_no_change_no_anomaly(self):
        rng = np.random.default_rng(2)
        phi = np.stack([random_simplex(rng, 20) for _ in range(6)])
        report = detect(phi, phi)
        assert np.allclose(report.js, 0.0)
        assert report.anomalies == frozenset()

    def test_disjoint_row_flagged(self):
        n_topics, vocab = 5, 10
        phi_prev = np.zeros((n_topics, vocab))
        phi_prev[:, :5] = 0.2
        phi_t = phi_prev.copy()
        phi_t[2] = 0.0
        phi_t[2, 5:] = 0.2  # disjoint support
        report = detect(phi_t, phi_prev)
        assert report.js[2] == pytest.approx(LN2, abs=1e-12)
        assert report.anomalies == frozenset({2})

    def test_exactly_the_shifted_topic_flagged(self):
        rng = np.random.default_rng(3)
        vocab = 50
        base = np.stack([random_simplex(rng, vocab) for _ in range(20)])
        jitter = base * (1 + 0.01 * rng.standard_normal(base.shape))
        phi_t = jitter / jitter.sum(axis=1, keepdims=True)
        phi_t[7] = random_simplex(rng, vocab)  # one large shift
        report = detect(phi_t, base)
        assert report.anomalies == frozenset({7})
        assert report.threshold == pytest.approx(
            quartile_threshold_brute(report.js.tolist()))

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(4)
        phi_prev = np.stack([random_simplex(rng, 12) for _ in range(8)])
        phi_t = np.stack([random_simplex(rng, 12) for _ in range(8)])
        perm = rng.permutation(8)
        plain = detect(phi_t, phi_prev)
        permuted = detect(phi_t[perm], phi_prev[perm])
        assert np.allclose(permuted.js, plain.js[perm])

    def test_shape_mismatch_fatal(self):
        with pytest.raises(ValueError):
            detect(np.ones((2, 3)) / 3, np.ones((2, 4)) / 4)

    def test_report_fields(self):
        report = detect(np.ones((4, 2)) / 2, np.ones((4, 2)) / 2, slice_index=3)
        assert isinstance(report, DivergenceReport)
        assert report.slice_index == 3
