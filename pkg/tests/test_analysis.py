import math

import pytest

from flowsketch.analysis import (
    AnalysisInputs,
    MetricReport,
    cms_full_accuracy_prob,
    compute_metrics,
    lock_flag_mc,
    overcount_bound,
    tiered_full_accuracy_prob,
)
from flowsketch.model import ConfigError

from .conftest import key_from_int


class TestCmsFullAccuracy:
    def test_single_flow_is_certain(self):
        for w, d in ((1, 1), (10, 3), (5000, 5)):
            assert cms_full_accuracy_prob(w, d, 1) == 1.0

    def test_frozen_value(self):
        # 1 - (1 - e^-1)^3, evaluated independently
        p = cms_full_accuracy_prob(1000, 3, 1001)
        e_inv = math.exp(-1.0)
        assert p == pytest.approx(1 - (1 - e_inv) ** 3, abs=1e-15)
        assert p == pytest.approx(0.7474195, abs=5e-7)

    def test_monotonicity(self):
        assert cms_full_accuracy_prob(1000, 3, 500) > cms_full_accuracy_prob(1000, 3, 900)
        assert cms_full_accuracy_prob(2000, 3, 900) > cms_full_accuracy_prob(1000, 3, 900)
        assert cms_full_accuracy_prob(1000, 4, 900) > cms_full_accuracy_prob(1000, 3, 900)

    def test_range(self):
        assert 0.0 <= cms_full_accuracy_prob(10, 2, 10_000) <= 1.0


class TestTieredFullAccuracy:
    def test_perfect_classifier(self):
        assert tiered_full_accuracy_prob(AnalysisInputs(1.0, 100, 3, 5000)) == 1.0

    def test_zero_accuracy_degenerates_to_cms(self):
        inputs = AnalysisInputs(0.0, 100, 3, 500)
        assert tiered_full_accuracy_prob(inputs) == cms_full_accuracy_prob(100, 3, 500)

    def test_convex_combination(self):
        inputs = AnalysisInputs(0.9, 100, 3, 500)
        pcms = cms_full_accuracy_prob(100, 3, 500)
        assert tiered_full_accuracy_prob(inputs) == pytest.approx(0.9 + 0.1 * pcms, abs=1e-15)
        # arithmetic of the combination at a pinned 0.5 CMS term
        assert 0.9 + (1 - 0.9) * 0.5 == 0.95

    def test_affine_increasing_in_accuracy(self):
        values = [tiered_full_accuracy_prob(AnalysisInputs(a / 10, 100, 3, 500)) for a in range(11)]
        assert all(b > a for a, b in zip(values, values[1:]))
        diffs = [b - a for a, b in zip(values, values[1:])]
        assert all(d == pytest.approx(diffs[0], abs=1e-12) for d in diffs)
        assert values[-1] == 1.0


class TestOvercountBound:
    def test_perfect_classifier_never_fails(self):
        bound = overcount_bound(AnalysisInputs(1.0, 100, 3, 0))
        assert bound.delta == 0.0

    def test_frozen_delta(self):
        bound = overcount_bound(AnalysisInputs(0.8, 100, 3, 0))
        assert bound.delta == pytest.approx(0.2 * math.exp(-3), abs=1e-12)
        assert bound.delta == pytest.approx(0.009957, abs=5e-7)

    def test_epsilon_and_mass(self):
        bound = overcount_bound(AnalysisInputs(0.5, 2048, 3, 0, n_large=100,
                                               total_packets=100_000, threshold=64))
        assert bound.epsilon == pytest.approx(math.e / 2048)
        assert bound.light_mass_bound == pytest.approx(100_000 - 0.5 * 100 * 64)


class TestMetrics:
    def test_perfect_estimates(self):
        truth = {key_from_int(i): i + 1 for i in range(10)}
        report = compute_metrics(truth, dict(truth), truth.keys(), truth.keys())
        assert report.are == 0.0 and report.aae == 0.0 and report.f1 == 1.0

    def test_hand_worked_example(self):
        a, b = key_from_int(1), key_from_int(2)
        report = compute_metrics({a: 10, b: 1}, {a: 11, b: 1})
        assert report.aae == pytest.approx(0.5)
        assert report.are == pytest.approx(0.05)

    def test_permutation_invariance(self):
        keys = [key_from_int(i) for i in range(50)]
        truth = {k: i + 1 for i, k in enumerate(keys)}
        est = {k: i + 2 for i, k in enumerate(keys)}
        fwd = compute_metrics(truth, est)
        rev = compute_metrics(dict(reversed(list(truth.items()))), est)
        assert fwd.are == pytest.approx(rev.are, rel=1e-12)
        assert fwd.aae == pytest.approx(rev.aae, rel=1e-12)

    def test_hh_sets(self):
        truth = {key_from_int(i): 100 for i in range(6)}
        hh_truth = {key_from_int(i) for i in range(4)}
        reported = {key_from_int(i) for i in range(2, 6)}
        report = compute_metrics(truth, dict(truth), hh_truth, reported)
        assert report.precision == pytest.approx(0.5)
        assert report.recall == pytest.approx(0.5)
        assert report.f1 == pytest.approx(0.5)

    def test_restrict_to_hh_universe(self):
        a, b = key_from_int(1), key_from_int(2)
        truth = {a: 100, b: 1}
        est = {a: 100, b: 5}
        full = compute_metrics(truth, est)
        hh_only = compute_metrics(truth, est, hh_truth={a}, hh_reported={a}, restrict_to_hh=True)
        assert full.are > 0
        assert hh_only.are == 0.0

    def test_rejects_empty_truth(self):
        with pytest.raises(ConfigError):
            compute_metrics({}, {})


class TestLockFlagMc:
    def test_single_one_exact(self):
        assert lock_flag_mc([1], trials=500, seed=1) == 1.0

    def test_all_zero_exact(self):
        assert lock_flag_mc([0, 0, 0], trials=500, seed=1) == 0.0

    def test_converges_to_label_mean(self):
        mean = lock_flag_mc([1, 1, 0, 1], trials=100_000, seed=7)
        assert abs(mean - 0.75) < 0.01

    def test_convergence_rate_bound(self):
        for trials in (1_000, 10_000, 100_000):
            mean = lock_flag_mc([1, 0, 1, 0, 1], trials=trials, seed=3)
            assert abs(mean - 0.6) < 4 * math.sqrt(0.25 / trials)

    def test_empty_sequence(self):
        assert lock_flag_mc([], trials=10, seed=1) == 0.0

    def test_rejects_bad_labels(self):
        with pytest.raises(ConfigError):
            lock_flag_mc([2], trials=10, seed=1)
