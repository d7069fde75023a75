"""Belief-function toolkit built on the open-world mass-function calculus.

Submodules:

- :mod:`tbmkit.core` - frames, mass functions, combination rules,
  pignistic transformation, discounting, conditioning.
- :mod:`tbmkit.classifier` - evidential classification from training data
  whose class labels are only partially known.
- :mod:`tbmkit.overlap` - fusion of two mass functions defined on
  partially overlapping frames.
- :mod:`tbmkit.clustering` - estimating the number of distinct events
  behind a set of sensor reports by minimizing within-group conflict.
- :mod:`tbmkit.pas` - probabilistic-argumentation support of documents in
  a ranked citation graph.
- :mod:`tbmkit.experiments` - synthetic benchmark generators and a
  linear-discriminant baseline for the classifier studies.
- :mod:`tbmkit.cli` - batch command-line front end.
"""

from tbmkit.core import (
    BeliefError,
    EmptyFocusError,
    Frame,
    FrameMismatchError,
    InvalidMassError,
    MassFunction,
    PignisticDistribution,
    RateOutOfRangeError,
    TotalConflictError,
    categorical,
    combine_conjunctive,
    combine_disjunctive,
    mass_from_dict,
    mass_to_dict,
    read_bba,
    simple_support,
    vacuous,
    write_bba,
)

__all__ = [
    "BeliefError",
    "EmptyFocusError",
    "Frame",
    "FrameMismatchError",
    "InvalidMassError",
    "MassFunction",
    "PignisticDistribution",
    "RateOutOfRangeError",
    "TotalConflictError",
    "categorical",
    "combine_conjunctive",
    "combine_disjunctive",
    "mass_from_dict",
    "mass_to_dict",
    "read_bba",
    "simple_support",
    "vacuous",
    "write_bba",
]

__version__ = "0.1.0"
