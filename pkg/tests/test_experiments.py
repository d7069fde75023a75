"""Tests for the synthetic benchmark studies."""

import numpy as np
import pytest

from tbmkit.core import Frame
from tbmkit.experiments import (
    BadSpecError,
    CoinFlip,
    Exact,
    GaussianMixtureSpec,
    MiddleClass,
    SIGMA2_LEVELS,
    SplitPairs,
    case_study,
    generate,
    lda_baseline,
    run_case_study,
    standard_normals,
    stream,
)


class TestStream:
    def test_deterministic(self):
        a = standard_normals(stream(7, 3), (100,))
        b = standard_normals(stream(7, 3), (100,))
        assert np.array_equal(a, b)

    def test_replications_differ(self):
        a = standard_normals(stream(7, 0), (100,))
        b = standard_normals(stream(7, 1), (100,))
        assert not np.array_equal(a, b)

    def test_normals_look_standard(self):
        z = standard_normals(stream(0, 0), (20000,))
        assert abs(z.mean()) < 0.03
        assert abs(z.std() - 1.0) < 0.03
        assert np.isfinite(z).all()


class TestSpecValidation:
    def test_dimension_mismatch(self):
        with pytest.raises(BadSpecError):
            GaussianMixtureSpec(("A", "B"), np.zeros((3, 2)),
                                np.stack([np.eye(2)] * 3), 10)

    def test_non_pd_covariance(self):
        with pytest.raises(BadSpecError):
            GaussianMixtureSpec(("A",), np.zeros((1, 2)),
                                np.array([[[1.0, 2.0], [2.0, 1.0]]]), 10)


class TestSchemes:
    frame5 = Frame(["A", "B", "C", "D", "E"])

    def test_exact_is_singleton(self):
        masks = Exact().assign(self.frame5, np.array([0, 3, 2]), None)
        assert masks == [0b1, 0b1000, 0b100]

    def test_coin_flip_scripted(self):
        # true class B; heads (u < .5) at the 1st and 4th class positions
        class Script:
            def random(self, shape):
                return np.array([[0.3, 0.99, 0.7, 0.2, 0.9]])
        masks = CoinFlip().assign(self.frame5, np.array([1]), Script())
        assert masks == [self.frame5.subset(["A", "B", "D"])]

    def test_coin_flip_always_contains_truth(self):
        rng = stream(3)
        true_idx = rng.integers(0, 5, size=200)
        masks = CoinFlip().assign(self.frame5, true_idx, rng)
        for t, m in zip(true_idx, masks):
            assert m & (1 << t)

    def test_split_pairs_structure(self):
        frame = Frame(["A", "B", "C"])
        true_idx = np.repeat([0, 1, 2], 10)
        masks = SplitPairs().assign(frame, true_idx, None)
        # class A: first half {A,B}, second half {A,C}
        assert masks[:5] == [0b011] * 5
        assert masks[5:10] == [0b101] * 5
        # class B: {A,B} then {B,C}
        assert masks[10:15] == [0b011] * 5
        assert masks[15:20] == [0b110] * 5
        # class C: {A,C} then {B,C}
        assert masks[20:25] == [0b101] * 5
        assert masks[25:30] == [0b110] * 5

    def test_middle_class_structure(self):
        frame = Frame(["A", "B", "C"])
        true_idx = np.repeat([0, 1, 2], 4)
        masks = MiddleClass("C").assign(frame, true_idx, None)
        assert masks[:4] == [0b001] * 4
        assert masks[4:8] == [0b010] * 4
        assert masks[8:10] == [0b101] * 2   # {A,C}
        assert masks[10:12] == [0b110] * 2  # {B,C}


class TestGenerate:
    def test_seed_determinism(self):
        study = case_study(1)
        s1 = generate(study.spec, study.scheme, 5, study.train_per_class, 2)
        s2 = generate(study.spec, study.scheme, 5, study.train_per_class, 2)
        assert np.array_equal(s1.test_features, s2.test_features)
        assert s1.test_labels == s2.test_labels
        assert [c.pkc for c in s1.learning_set.cases] == \
            [c.pkc for c in s2.learning_set.cases]

    def test_empirical_means_near_spec(self):
        study = case_study(1)
        split = generate(study.spec, study.scheme, 0, study.train_per_class)
        frame = study.spec.frame
        all_X = np.vstack([np.vstack([c.features for c in split.learning_set.cases]),
                           split.test_features])
        all_labels = split.train_true_labels + split.test_labels
        for c, label in enumerate(frame.labels):
            mask = np.array([lab == label for lab in all_labels])
            mean = all_X[mask].mean(axis=0)
            assert np.abs(mean - study.spec.means[c]).max() < 0.5

    def test_split_sizes(self):
        study = case_study(1)
        split = generate(study.spec, study.scheme, 0, 20)
        assert len(split.learning_set) == 60
        assert len(split.test_labels) == 540
        from collections import Counter
        assert Counter(split.train_true_labels) == {"A": 20, "B": 20, "C": 20}

    def test_pkc_contains_truth_in_all_studies(self):
        for case_id in (1, 2, 3, 4, 5):
            study = case_study(case_id)
            split = generate(study.spec, study.scheme, 1, study.train_per_class)
            frame = study.spec.frame
            for case, true_label in zip(split.learning_set.cases,
                                        split.train_true_labels):
                assert case.pkc & frame.singleton(true_label)

    def test_train_must_leave_test(self):
        study = case_study(1)
        with pytest.raises(BadSpecError):
            generate(study.spec, study.scheme, 0, 200)


class TestLdaBaseline:
    def test_separated_clusters_are_perfect(self):
        frame = Frame(["A", "B"])
        rng = stream(1)
        train = np.vstack([standard_normals(rng, (20, 2)),
                           standard_normals(rng, (20, 2)) + 50.0])
        labels = ["A"] * 20 + ["B"] * 20
        test = np.vstack([standard_normals(rng, (10, 2)),
                          standard_normals(rng, (10, 2)) + 50.0])
        test_labels = ["A"] * 10 + ["B"] * 10
        assert lda_baseline(frame, train, labels, test, test_labels) == 100.0

    def test_empty_test_rejected(self):
        frame = Frame(["A"])
        with pytest.raises(ValueError):
            lda_baseline(frame, np.zeros((2, 1)), ["A", "A"],
                         np.zeros((0, 1)), [])


class TestRunCaseStudy:
    def test_zero_replications_rejected(self):
        with pytest.raises(ValueError):
            run_case_study(1, 0)

    def test_unknown_study_rejected(self):
        with pytest.raises(BadSpecError):
            run_case_study(9, 1)

    def test_seed_determinism_of_pcc(self):
        r1 = run_case_study(2, 1, seed=3)
        r2 = run_case_study(2, 1, seed=3)
        assert r1.rows == r2.rows

    def test_large_variance_levels_match_baseline(self):
        # with precisely known classes and sigma^2=50, the two classifiers
        # should sit close together
        result = run_case_study(4, 3, seed=0, sigma2=50)
        assert abs(result.mean("tbm_pcc") - result.mean("baseline_pcc")) <= 4.0

    @pytest.mark.slow
    def test_growing_variance_degrades_tbm(self):
        means = []
        for sigma2 in SIGMA2_LEVELS:
            result = run_case_study(4, 5, seed=0, sigma2=sigma2)
            means.append(result.mean("tbm_pcc"))
        # non-increasing within a small noise allowance
        for earlier, later in zip(means, means[1:]):
            assert later <= earlier + 1.0
        assert means[-1] < means[0] - 10
