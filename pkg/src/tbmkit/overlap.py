"""Fusion of two mass functions defined on partially overlapping frames.

Two sources may be competent on different but intersecting sets of worlds
(one sensor knows airplanes and helicopters, another helicopters and
rockets).  Their reports cannot be pooled by the ordinary conjunctive
rule, which requires a shared frame, and probability-style
"de-conditioning" of each report to the union frame is underdetermined
(infinitely many extensions exist).  The rule implemented here instead
distributes the conjunctive combination of the two reports *restricted to
the shared worlds* back over the union frame, proportionally to each
source's own masses.  By construction, conditioning the fused result on
the shared worlds reproduces the conjunctive combination of the two
conditioned inputs.

For a subset ``A`` of the union frame, write ``A1``, ``A2``, ``A0`` for
its intersections with the first frame, the second frame and the shared
part.  The fused mass is::

    m(A) = m1(A1)/m1[0](A0) * m2(A2)/m2[0](A0) * (m1[0] (x) m2[0])(A0)

where ``mk[0]`` is ``mk`` conditioned (unnormalized) on the shared part
and ``(x)`` is the unnormalized conjunctive rule.  Terms with a zero
numerator are skipped.

When the combination of the conditioned reports puts mass on a shared
subset that is focal for neither conditioned source (possible once the
overlap has two or more labels, or when exactly one source is conflict
free), the proportional split above is undefined.  That orphaned mass is
transferred to the least committed set consistent with it: the shared
subset united with everything outside the overlap.  Such transfers are
reported so callers can see when the rule left its well-defined regime.
"""

from __future__ import annotations

from dataclasses import dataclass

from tbmkit.core import BeliefError, Frame, MassFunction


class DisjointFramesError(BeliefError):
    """The two frames share no label, so no fusion constraint exists."""


@dataclass(frozen=True)
class OrphanTransfer:
    """One redistribution of orphaned mass, for diagnostics."""

    shared_subset: tuple[str, ...]
    mass: float
    target: tuple[str, ...]


@dataclass(frozen=True)
class OverlapFusion:
    """Result of fusing two overlapping sources."""

    mass: MassFunction
    shared_labels: tuple[str, ...]
    orphan_transfers: tuple[OrphanTransfer, ...]

    @property
    def orphan_free(self) -> bool:
        return not self.orphan_transfers


class OverlapProblem:
    """Two mass functions whose frames overlap by at least one label.

    Labels are matched by name.  The union frame keeps the first frame's
    labels first, followed by the second frame's new labels in order.
    """

    __slots__ = ("m1", "m2", "shared_labels", "union_frame")

    def __init__(self, m1: MassFunction, m2: MassFunction):
        shared = tuple(lab for lab in m1.frame.labels if lab in m2.frame._index)
        if not shared:
            raise DisjointFramesError(
                f"frames {m1.frame!r} and {m2.frame!r} share no label"
            )
        union = m1.frame.labels + tuple(
            lab for lab in m2.frame.labels if lab not in m1.frame._index
        )
        object.__setattr__(self, "m1", m1)
        object.__setattr__(self, "m2", m2)
        object.__setattr__(self, "shared_labels", shared)
        object.__setattr__(self, "union_frame", Frame(union))

    def __setattr__(self, name, value):
        raise AttributeError("OverlapProblem is immutable")


def _lift(mask: int, source: Frame, target: Frame) -> int:
    """Translate a subset mask from one frame's bit layout to another's."""
    out = 0
    for i, lab in enumerate(source.labels):
        if mask >> i & 1:
            out |= target.singleton(lab)
    return out


def fuse_overlapping(problem: OverlapProblem) -> OverlapFusion:
    """Fuse the two sources onto their union frame, with diagnostics."""
    m1, m2 = problem.m1, problem.m2
    union = problem.union_frame
    shared_union_mask = union.subset(problem.shared_labels)

    # Conditioned masses and per-source focal sets, all in union-frame bits.
    shared1 = m1.frame.subset(problem.shared_labels)
    shared2 = m2.frame.subset(problem.shared_labels)
    cond1 = {_lift(k, m1.frame, union): v for k, v in m1.condition(shared1).items()}
    cond2 = {_lift(k, m2.frame, union): v for k, v in m2.condition(shared2).items()}

    by_shared1: dict[int, list[tuple[int, float]]] = {}
    for mask, value in m1.items():
        lifted = _lift(mask, m1.frame, union)
        by_shared1.setdefault(lifted & shared_union_mask, []).append((lifted, value))
    by_shared2: dict[int, list[tuple[int, float]]] = {}
    for mask, value in m2.items():
        lifted = _lift(mask, m2.frame, union)
        by_shared2.setdefault(lifted & shared_union_mask, []).append((lifted, value))

    # Conjunctive combination of the conditioned reports, on shared subsets.
    joint: dict[int, float] = {}
    for a, va in cond1.items():
        for b, vb in cond2.items():
            key = a & b
            joint[key] = joint.get(key, 0.0) + va * vb

    outside = union.full & ~shared_union_mask
    out: dict[int, float] = {}
    transfers: list[OrphanTransfer] = []
    for shared_subset, pooled in sorted(joint.items()):
        d1 = cond1.get(shared_subset, 0.0)
        d2 = cond2.get(shared_subset, 0.0)
        if d1 > 0.0 and d2 > 0.0:
            scale = pooled / (d1 * d2)
            for x, vx in by_shared1[shared_subset]:
                for y, vy in by_shared2[shared_subset]:
                    key = x | y
                    out[key] = out.get(key, 0.0) + vx * vy * scale
        else:
            target = shared_subset | outside
            out[target] = out.get(target, 0.0) + pooled
            transfers.append(OrphanTransfer(
                shared_subset=union.members(shared_subset),
                mass=pooled,
                target=union.members(target),
            ))

    return OverlapFusion(
        mass=MassFunction(union, out),
        shared_labels=problem.shared_labels,
        orphan_transfers=tuple(transfers),
    )


def combine_overlapping(m1: MassFunction, m2: MassFunction) -> MassFunction:
    """Fused mass function on the union frame (see :func:`fuse_overlapping`)."""
    return fuse_overlapping(OverlapProblem(m1, m2)).mass
