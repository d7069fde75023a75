"""Shared fixtures: the small sensor scenarios used across the suite."""

import pytest

from tbmkit.core import Frame, MassFunction, simple_support


@pytest.fixture
def two_sensor_overlap():
    """Two sources on partially overlapping frames {A,B} and {B,C}."""
    f1 = Frame(["A", "B"])
    f2 = Frame(["B", "C"])
    m1 = MassFunction(f1, {f1.subset(["A"]): 0.6, f1.subset(["B"]): 0.1, f1.full: 0.3})
    m2 = MassFunction(f2, {f2.subset(["B"]): 0.7, f2.subset(["C"]): 0.2, f2.full: 0.1})
    return m1, m2


@pytest.fixture
def four_sensor_pool():
    """Four simple support functions, two pointing at each component."""
    frame = Frame(["C1", "C2"])
    c1 = frame.subset(["C1"])
    c2 = frame.subset(["C2"])
    return frame, [
        simple_support(frame, c1, 0.7),
        simple_support(frame, c1, 0.8),
        simple_support(frame, c2, 0.6),
        simple_support(frame, c2, 0.9),
    ]
