"""Core calculus of belief functions on finite frames.

Masses are allocated to subsets of a frame of discernment and manipulated
with the usual algebra: belief / plausibility queries, the pignistic
transformation for decision making, conjunctive and disjunctive pooling,
conditioning and discounting.  The open-world convention is used
throughout: mass on the empty set is legal and measures contradiction
between pooled sources.

Subsets are plain integers interpreted as bit patterns against a
:class:`Frame` (bit ``i`` set means label ``i`` is a member).  Frames are
limited to 64 labels so every subset fits in one machine word; all the
applications in this package use far smaller frames.
"""

from __future__ import annotations

import json
from math import fsum
from typing import Iterable, Iterator, Mapping

MAX_FRAME_SIZE = 64

#: Tolerance accepted on the total mass at construction time.  Inputs are
#: typically decimal text, so small rounding drift is tolerated and then
#: divided out exactly.
MASS_SUM_TOL = 1e-9


class BeliefError(Exception):
    """Base class for errors raised by the belief-function calculus."""


class EmptyFocusError(BeliefError):
    """A simple support function was requested with an empty focus."""


class FrameMismatchError(BeliefError):
    """Two mass functions on different frames were combined."""


class TotalConflictError(BeliefError):
    """An operation is undefined because all mass sits on the empty set."""


class RateOutOfRangeError(BeliefError):
    """A support or discount rate fell outside [0, 1]."""


class InvalidMassError(BeliefError):
    """A mass assignment violates nonnegativity or does not sum to one."""


class Frame:
    """An ordered finite set of distinct world labels.

    The ordering is significant: it fixes the bit position of each label
    in subset masks and the tie-breaking order of decisions.
    """

    __slots__ = ("labels", "_index")

    def __init__(self, labels: Iterable[str]):
        labels = tuple(str(x) for x in labels)
        if not 1 <= len(labels) <= MAX_FRAME_SIZE:
            raise ValueError(
                f"frame must have between 1 and {MAX_FRAME_SIZE} labels, got {len(labels)}"
            )
        if len(set(labels)) != len(labels):
            raise ValueError("frame labels must be pairwise distinct")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(labels)})

    def __setattr__(self, name, value):
        raise AttributeError("Frame is immutable")

    def __len__(self) -> int:
        return len(self.labels)

    def __eq__(self, other) -> bool:
        return isinstance(other, Frame) and self.labels == other.labels

    def __hash__(self) -> int:
        return hash(self.labels)

    def __repr__(self) -> str:
        return f"Frame({list(self.labels)!r})"

    @property
    def full(self) -> int:
        """Mask of the whole frame."""
        return (1 << len(self.labels)) - 1

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"unknown label {label!r}") from None

    def singleton(self, label: str) -> int:
        """Mask containing exactly ``label``."""
        return 1 << self.index(label)

    def subset(self, labels: Iterable[str]) -> int:
        """Mask containing the given labels (the empty iterable gives 0)."""
        mask = 0
        for lab in labels:
            mask |= self.singleton(lab)
        return mask

    def members(self, mask: int) -> tuple[str, ...]:
        """Labels of a subset mask, in frame order."""
        self._check_mask(mask)
        return tuple(lab for i, lab in enumerate(self.labels) if mask >> i & 1)

    def format_subset(self, mask: int) -> str:
        """Human-readable rendering of a subset mask."""
        if mask == 0:
            return "{}"
        return "{" + ",".join(self.members(mask)) + "}"

    def _check_mask(self, mask: int) -> None:
        if not 0 <= mask <= self.full:
            raise ValueError(f"mask {mask:#x} is not a subset of {self!r}")


class PignisticDistribution:
    """Probability distribution over a frame's labels, for decisions."""

    __slots__ = ("frame", "probabilities")

    def __init__(self, frame: Frame, probabilities: Iterable[float]):
        probabilities = tuple(float(p) for p in probabilities)
        if len(probabilities) != len(frame):
            raise ValueError("one probability per frame label required")
        if any(p < 0 for p in probabilities):
            raise InvalidMassError("pignistic probabilities must be nonnegative")
        if abs(fsum(probabilities) - 1.0) > MASS_SUM_TOL:
            raise InvalidMassError("pignistic probabilities must sum to 1")
        object.__setattr__(self, "frame", frame)
        object.__setattr__(self, "probabilities", probabilities)

    def __setattr__(self, name, value):
        raise AttributeError("PignisticDistribution is immutable")

    def __getitem__(self, label: str) -> float:
        return self.probabilities[self.frame.index(label)]

    def argmax(self) -> str:
        """Most probable label; ties go to the lowest label index."""
        best = max(range(len(self.frame)), key=lambda i: (self.probabilities[i], -i))
        return self.frame.labels[best]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.frame.labels, self.probabilities))

    def __repr__(self) -> str:
        inner = ", ".join(f"{l}: {p:.4g}" for l, p in self.as_dict().items())
        return f"PignisticDistribution({inner})"


class MassFunction:
    """A basic belief assignment: masses on subsets of a frame.

    Only strictly positive masses are stored.  The total must be 1 within
    ``MASS_SUM_TOL``; it is then divided out exactly so downstream algebra
    is not polluted by input rounding.  Mass on the empty set is allowed.

    Instances are immutable; every operation returns a new object.
    """

    __slots__ = ("frame", "_focal")

    def __init__(self, frame: Frame, focal: Mapping[int, float]):
        cleaned: dict[int, float] = {}
        for mask, value in focal.items():
            mask = int(mask)
            frame._check_mask(mask)
            value = float(value)
            if value < 0:
                raise InvalidMassError(f"negative mass {value} on {frame.format_subset(mask)}")
            if value > 0:
                cleaned[mask] = cleaned.get(mask, 0.0) + value
        total = fsum(cleaned.values())
        if abs(total - 1.0) > MASS_SUM_TOL:
            raise InvalidMassError(f"masses must sum to 1 (got {total!r})")
        # divide the drift out and absorb the leftover rounding residual
        # into the largest mass, where it is exactly representable; the
        # stored masses then sum to exactly 1.0 and construction is
        # idempotent (a stored mass function reparses identically)
        values = {m: cleaned[m] for m in sorted(cleaned)}
        if total != 1.0:
            values = {m: v / total for m, v in values.items()}
            for _ in range(4):
                residual = 1.0 - fsum(values.values())
                if residual == 0.0:
                    break
                largest = max(values, key=lambda m: (values[m], -m))
                values[largest] += residual
        object.__setattr__(self, "frame", frame)
        object.__setattr__(self, "_focal", values)

    def __setattr__(self, name, value):
        raise AttributeError("MassFunction is immutable")

    # -- inspection ----------------------------------------------------

    def mass(self, subset: int) -> float:
        """Mass of one subset (0.0 if it is not focal)."""
        self.frame._check_mask(subset)
        return self._focal.get(subset, 0.0)

    def items(self) -> Iterator[tuple[int, float]]:
        """Focal sets with their masses, in ascending bit-pattern order."""
        return iter(self._focal.items())

    def focal_sets(self) -> tuple[int, ...]:
        return tuple(self._focal)

    def conflict(self) -> float:
        """Mass on the empty set: the internal contradiction."""
        return self._focal.get(0, 0.0)

    def is_vacuous(self) -> bool:
        return self._focal == {self.frame.full: 1.0}

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MassFunction)
            and self.frame == other.frame
            and self._focal == other._focal
        )

    def __hash__(self) -> int:
        return hash((self.frame, tuple(self._focal.items())))

    def __repr__(self) -> str:
        inner = "; ".join(
            f"{self.frame.format_subset(m)}: {v:.4g}" for m, v in self.items()
        )
        return f"MassFunction({inner})"

    # -- queries -------------------------------------------------------

    def bel(self, subset: int) -> float:
        """Belief in ``subset``: total mass of its nonempty subsets."""
        self.frame._check_mask(subset)
        return fsum(v for m, v in self._focal.items() if m != 0 and m & ~subset == 0)

    def pl(self, subset: int) -> float:
        """Plausibility of ``subset``: total mass not contradicting it."""
        self.frame._check_mask(subset)
        return fsum(v for m, v in self._focal.items() if m & subset)

    def pignistic(self) -> PignisticDistribution:
        """Spread each focal mass evenly over its members, renormalizing
        away any conflict mass.

        Normalizing by the accumulated shares (whose total is 1 - m(empty))
        keeps the transform well defined even when the conflict mass is
        within rounding distance of 1; it fails only when no mass at all
        sits on a nonempty set.
        """
        probs = [0.0] * len(self.frame)
        for mask, value in self._focal.items():
            if mask == 0:
                continue
            share = value / mask.bit_count()
            for i in range(len(self.frame)):
                if mask >> i & 1:
                    probs[i] += share
        total = fsum(probs)
        if total <= 0.0:
            raise TotalConflictError("pignistic transform undefined: m(empty) = 1")
        return PignisticDistribution(self.frame, [p / total for p in probs])

    # -- algebra -------------------------------------------------------

    def condition(self, subset: int) -> MassFunction:
        """Transfer every focal mass to its intersection with ``subset``.

        Unnormalized conditioning: mass falling outside ``subset`` lands
        on the empty set.
        """
        self.frame._check_mask(subset)
        out: dict[int, float] = {}
        for mask, value in self._focal.items():
            key = mask & subset
            out[key] = out.get(key, 0.0) + value
        return MassFunction(self.frame, out)

    def discount(self, rate: float) -> MassFunction:
        """Scale all committed mass by ``rate``, moving the rest to the
        frame.  ``rate=1`` is the identity, ``rate=0`` the vacuous state."""
        if not 0.0 <= rate <= 1.0:
            raise RateOutOfRangeError(f"discount rate must be in [0, 1], got {rate}")
        out: dict[int, float] = {}
        for mask, value in self._focal.items():
            if mask != self.frame.full:
                out[mask] = rate * value
        out[self.frame.full] = 1.0 - rate + rate * self._focal.get(self.frame.full, 0.0)
        return MassFunction(self.frame, out)


# -- constructors -------------------------------------------------------


def vacuous(frame: Frame) -> MassFunction:
    """Total ignorance: all mass on the whole frame."""
    return MassFunction(frame, {frame.full: 1.0})


def categorical(frame: Frame, subset: int) -> MassFunction:
    """All mass on one nonempty subset."""
    if subset == 0:
        raise EmptyFocusError("categorical mass function needs a nonempty subset")
    return MassFunction(frame, {subset: 1.0})


def simple_support(frame: Frame, focus: int, rate: float) -> MassFunction:
    """Support ``rate`` for ``focus``, the rest on the frame."""
    if focus == 0:
        raise EmptyFocusError("support focus must be nonempty")
    frame._check_mask(focus)
    if not 0.0 <= rate <= 1.0:
        raise RateOutOfRangeError(f"support rate must be in [0, 1], got {rate}")
    focal = {frame.full: 1.0 - rate}
    focal[focus] = focal.get(focus, 0.0) + rate
    return MassFunction(frame, focal)


# -- combination --------------------------------------------------------


def _check_same_frame(m1: MassFunction, m2: MassFunction) -> None:
    if m1.frame != m2.frame:
        raise FrameMismatchError(
            f"cannot combine mass functions on {m1.frame!r} and {m2.frame!r}"
        )


def _combine_pair(m1: MassFunction, m2: MassFunction, union: bool) -> dict[int, float]:
    out: dict[int, float] = {}
    for a, va in m1.items():
        for b, vb in m2.items():
            key = (a | b) if union else (a & b)
            out[key] = out.get(key, 0.0) + va * vb
    return out


def combine_conjunctive(
    *masses: MassFunction, normalize: bool = False
) -> MassFunction:
    """Pool sources by intersecting focal sets and multiplying masses.

    By default the result is left unnormalized, so the mass accumulated
    on the empty set measures the contradiction between the sources.
    With ``normalize=True`` that conflict is divided out (Dempster's
    rule), which fails when the sources are flatly contradictory.

    Several mass functions are folded pairwise left to right; the rule is
    associative and commutative so the order does not matter.
    """
    if not masses:
        raise ValueError("need at least one mass function")
    result = masses[0]
    for m in masses[1:]:
        _check_same_frame(result, m)
        result = MassFunction(result.frame, _combine_pair(result, m, union=False))
    if normalize and result.conflict() > 0.0:
        kept = {m: v for m, v in result.items() if m != 0}
        total = fsum(kept.values())
        if total <= 0.0:
            raise TotalConflictError("cannot normalize: sources are flatly contradictory")
        result = MassFunction(result.frame, {m: v / total for m, v in kept.items()})
    return result


def combine_disjunctive(*masses: MassFunction) -> MassFunction:
    """Pool sources by uniting focal sets and multiplying masses.

    Appropriate when at least one source (rather than all) is known to be
    reliable; the result only commits to what the sources jointly allow.
    """
    if not masses:
        raise ValueError("need at least one mass function")
    result = masses[0]
    for m in masses[1:]:
        _check_same_frame(result, m)
        result = MassFunction(result.frame, _combine_pair(result, m, union=True))
    return result


# -- JSON text format ----------------------------------------------------
#
# {"frame": ["A", "B", "C"],
#  "focal": [{"set": ["A"], "mass": 0.6}, {"set": ["A", "B"], "mass": 0.4}]}
#
# "set": [] denotes the empty set.  Unknown labels and duplicate sets are
# rejected.  Zero masses are legal in the text and dropped on load.


def mass_to_dict(m: MassFunction) -> dict:
    """JSON-ready dictionary for a mass function."""
    return {
        "frame": list(m.frame.labels),
        "focal": [
            {"set": list(m.frame.members(mask)), "mass": value}
            for mask, value in m.items()
        ],
    }


def mass_from_dict(data: Mapping) -> MassFunction:
    """Parse the JSON dictionary format back into a mass function."""
    try:
        frame = Frame(data["frame"])
        entries = data["focal"]
    except (KeyError, TypeError) as exc:
        raise InvalidMassError(f"malformed mass-function document: {exc}") from exc
    focal: dict[int, float] = {}
    for entry in entries:
        if not isinstance(entry, Mapping) or "set" not in entry or "mass" not in entry:
            raise InvalidMassError(f"malformed focal entry {entry!r}")
        try:
            mask = frame.subset(entry["set"])
        except KeyError as exc:
            raise InvalidMassError(str(exc)) from exc
        try:
            value = float(entry["mass"])
        except (TypeError, ValueError) as exc:
            raise InvalidMassError(f"bad mass in focal entry {entry!r}") from exc
        if mask in focal:
            raise InvalidMassError(
                f"duplicate set {frame.format_subset(mask)} in mass-function document"
            )
        focal[mask] = value
    return MassFunction(frame, focal)


def read_bba(path) -> MassFunction:
    """Load a mass function from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        return mass_from_dict(json.load(fh))


def write_bba(m: MassFunction, path) -> None:
    """Write a mass function to a JSON file."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mass_to_dict(m), fh, indent=2)
        fh.write("\n")
