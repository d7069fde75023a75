"""Tests for overlapping-frame fusion."""

import math
import random

import pytest

from tbmkit.core import Frame, MassFunction, combine_conjunctive, vacuous
from tbmkit.overlap import (
    DisjointFramesError,
    OverlapProblem,
    combine_overlapping,
    fuse_overlapping,
)


class TestTwoSensorScenario:
    """The airplane/helicopter/rocket scenario with frames {A,B} and {B,C}."""

    def test_fused_masses(self, two_sensor_overlap):
        m = combine_overlapping(*two_sensor_overlap)
        f = m.frame
        assert f.labels == ("A", "B", "C")
        assert m.mass(f.subset(["B"])) == pytest.approx(0.07)
        assert m.mass(f.subset(["A", "B"])) == pytest.approx(0.21)
        assert m.mass(f.subset(["A", "C"])) == pytest.approx(0.68)
        assert m.mass(f.subset(["B", "C"])) == pytest.approx(0.01)
        assert m.mass(f.full) == pytest.approx(0.03)
        assert m.mass(f.subset(["A"])) == 0.0
        assert m.mass(f.subset(["C"])) == 0.0
        assert math.fsum(v for _, v in m.items()) == pytest.approx(1.0, abs=1e-12)

    def test_fused_plausibility_column(self, two_sensor_overlap):
        m = combine_overlapping(*two_sensor_overlap)
        f = m.frame
        expected = {("A",): 0.92, ("B",): 0.32, ("C",): 0.72,
                    ("A", "B"): 1.0, ("A", "C"): 0.93, ("B", "C"): 1.0,
                    ("A", "B", "C"): 1.0}
        for labels, value in expected.items():
            assert m.pl(f.subset(labels)) == pytest.approx(value)

    def test_fused_pignistic(self, two_sensor_overlap):
        betp = combine_overlapping(*two_sensor_overlap).pignistic()
        assert betp["A"] == pytest.approx(0.455)
        assert betp["B"] == pytest.approx(0.190)
        assert betp["C"] == pytest.approx(0.355)

    def test_orphan_free(self, two_sensor_overlap):
        fusion = fuse_overlapping(OverlapProblem(*two_sensor_overlap))
        assert fusion.orphan_free
        assert fusion.shared_labels == ("B",)


class TestEdgeCases:
    def test_identical_frames_reduce_to_conjunctive(self):
        frame = Frame(["A", "B", "C"])
        rng = random.Random(7)
        for _ in range(25):
            m1 = _random_mass(frame, rng)
            m2 = _random_mass(frame, rng)
            fused = combine_overlapping(m1, m2)
            plain = combine_conjunctive(m1, m2)
            for k in set(fused.focal_sets()) | set(plain.focal_sets()):
                assert fused.mass(k) == pytest.approx(plain.mass(k), abs=1e-12)

    def test_vacuous_against_categorical(self):
        f1 = Frame(["A", "B"])
        f2 = Frame(["B", "C"])
        m1 = vacuous(f1)
        m2 = MassFunction(f2, {f2.subset(["B"]): 1.0})
        m = combine_overlapping(m1, m2)
        assert m.mass(m.frame.subset(["A", "B"])) == pytest.approx(1.0)

    def test_disjoint_frames_rejected(self):
        with pytest.raises(DisjointFramesError):
            combine_overlapping(vacuous(Frame(["A"])), vacuous(Frame(["B"])))

    def test_union_frame_ordering(self):
        f1 = Frame(["X", "Y"])
        f2 = Frame(["Z", "Y", "W"])
        problem = OverlapProblem(vacuous(f1), vacuous(f2))
        assert problem.union_frame.labels == ("X", "Y", "Z", "W")
        assert problem.shared_labels == ("Y",)


def _random_mass(frame, rng, allow_empty=False):
    low = 0 if allow_empty else 1
    n_focal = rng.randint(1, min(5, frame.full - low + 1))
    focals = rng.sample(range(low, frame.full + 1), n_focal)
    weights = [rng.random() + 1e-3 for _ in focals]
    total = sum(weights)
    return MassFunction(frame, {f: w / total for f, w in zip(focals, weights)})


def _random_overlap_pair(rng, max_labels=5):
    """Random pair of mass functions on overlapping frames."""
    pool = ["A", "B", "C", "D", "E"][:max_labels]
    n_shared = rng.randint(1, 3)
    shared = rng.sample(pool, n_shared)
    rest = [x for x in pool if x not in shared]
    rng.shuffle(rest)
    cut = rng.randint(0, len(rest))
    f1 = Frame(sorted(shared + rest[:cut]))
    f2 = Frame(sorted(shared + rest[cut:]))
    return _random_mass(f1, rng), _random_mass(f2, rng)


class TestFusionProperties:
    def test_conditioning_commutation(self):
        # Conditioning the fused result on the shared worlds must equal the
        # conjunctive combination of the separately conditioned inputs,
        # whether or not orphan redistribution was needed (the orphan
        # target intersects the shared part exactly in the orphan subset).
        rng = random.Random(20240917)
        seen_orphan = 0
        for _ in range(200):
            m1, m2 = _random_overlap_pair(rng)
            problem = OverlapProblem(m1, m2)
            fusion = fuse_overlapping(problem)
            seen_orphan += not fusion.orphan_free
            union = problem.union_frame
            shared_mask = union.subset(problem.shared_labels)
            lhs = fusion.mass.condition(shared_mask)
            c1 = m1.condition(m1.frame.subset(problem.shared_labels))
            c2 = m2.condition(m2.frame.subset(problem.shared_labels))
            shared_frame_masses = {}
            for a, va in c1.items():
                for b, vb in c2.items():
                    key = _lift_labels(a, m1.frame, union) & _lift_labels(b, m2.frame, union)
                    shared_frame_masses[key] = shared_frame_masses.get(key, 0.0) + va * vb
            for k in set(lhs.focal_sets()) | set(shared_frame_masses):
                assert lhs.mass(k) == pytest.approx(
                    shared_frame_masses.get(k, 0.0), abs=1e-12)
        assert seen_orphan > 0  # the generator must exercise the orphan path

    def test_mass_conservation_with_orphans(self):
        rng = random.Random(99)
        for _ in range(200):
            m1, m2 = _random_overlap_pair(rng)
            fusion = fuse_overlapping(OverlapProblem(m1, m2))
            assert math.fsum(v for _, v in fusion.mass.items()) == pytest.approx(
                1.0, abs=1e-12)

    def test_symmetry(self):
        rng = random.Random(5)
        for _ in range(100):
            m1, m2 = _random_overlap_pair(rng)
            a = combine_overlapping(m1, m2)
            b = combine_overlapping(m2, m1)
            for k in set(a.focal_sets()) | {_lift_labels(k, b.frame, a.frame)
                                            for k in b.focal_sets()}:
                assert a.mass(k) == pytest.approx(
                    b.mass(_lift_labels(k, a.frame, b.frame)), abs=1e-12)


def _lift_labels(mask, source, target):
    out = 0
    for i, lab in enumerate(source.labels):
        if mask >> i & 1:
            out |= target.singleton(lab)
    return out
