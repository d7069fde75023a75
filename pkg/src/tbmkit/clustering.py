"""Estimating the number of events behind a set of sensor reports.

When several sensors report on what may be one or several distinct
events, pooling all reports conjunctively piles mass onto the empty set
whenever the sensors disagree.  That conflict mass is a well-founded
discrepancy measure: sensors reporting on the same event should pool with
little conflict, sensors reporting on different events should not be
pooled at all.  Partitioning the sensors into groups and summing the
within-group conflict therefore scores how plausible it is that the
partition matches the true sensor-to-event association; the smallest
number of groups whose best partition keeps the total conflict below a
tolerance is a reasonable estimate of the number of events.

Partitions are enumerated exhaustively through restricted growth strings
for small pools; a greedy seed plus first-improvement local moves with
random restarts is used past 12 sources and flagged as heuristic in the
report.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from math import fsum
from typing import Iterable, Iterator, Sequence

from tbmkit.core import BeliefError, MassFunction, combine_conjunctive

EXHAUSTIVE_LIMIT = 12
HEURISTIC_RESTARTS = 10


class KTooLargeError(BeliefError):
    """More groups were requested than there are sources."""


class EvidencePool:
    """A sequence of mass functions on one frame, one per sensor."""

    __slots__ = ("frame", "sources")

    def __init__(self, sources: Sequence[MassFunction]):
        sources = tuple(sources)
        if not sources:
            raise ValueError("need at least one source")
        frame = sources[0].frame
        for m in sources[1:]:
            if m.frame != frame:
                raise ValueError("all sources must share one frame")
        object.__setattr__(self, "frame", frame)
        object.__setattr__(self, "sources", sources)

    def __setattr__(self, name, value):
        raise AttributeError("EvidencePool is immutable")

    def __len__(self) -> int:
        return len(self.sources)


@dataclass(frozen=True)
class Partition:
    """A grouping of source indices, held in canonical form.

    Canonical form: each group is sorted ascending and groups are ordered
    by their smallest member.
    """

    groups: tuple[tuple[int, ...], ...]

    @staticmethod
    def of(groups: Iterable[Iterable[int]]) -> "Partition":
        canon = tuple(sorted((tuple(sorted(g)) for g in groups),
                             key=lambda g: g[0]))
        return Partition(canon)

    @staticmethod
    def from_assignment(assignment: Sequence[int]) -> "Partition":
        """Build from a group index per source."""
        buckets: dict[int, list[int]] = {}
        for i, g in enumerate(assignment):
            buckets.setdefault(g, []).append(i)
        return Partition.of(buckets.values())

    def __post_init__(self):
        seen: set[int] = set()
        for group in self.groups:
            if not group:
                raise ValueError("partition groups must be nonempty")
            if seen & set(group):
                raise ValueError("partition groups must be disjoint")
            seen.update(group)
        if seen != set(range(len(seen))):
            raise ValueError("partition must cover source indices 0..n-1")

    @property
    def k(self) -> int:
        return len(self.groups)

    def describe(self, base: int = 1) -> str:
        """Compact rendering such as ``12|34`` (1-based by default).

        Indices are concatenated while they stay single digits, otherwise
        comma-separated.
        """
        widest = max(i + base for g in self.groups for i in g)
        sep = "" if widest <= 9 else ","
        return "|".join(sep.join(str(i + base) for i in g) for g in self.groups)


@dataclass(frozen=True)
class ConflictReport:
    """Per-group and total conflict of one partition."""

    partition: Partition
    group_conflicts: tuple[float, ...]
    total: float
    method: str = "exhaustive"


def group_conflict(pool: EvidencePool, group: Iterable[int]) -> float:
    """Conflict mass of the unnormalized pooling of one group of sources.

    A singleton group contributes its source's own conflict mass.
    """
    members = sorted(set(group))
    if not members:
        raise ValueError("group must be nonempty")
    combined = combine_conjunctive(*(pool.sources[i] for i in members))
    return combined.conflict()


def total_conflict(pool: EvidencePool, partition: Partition,
                   method: str = "exhaustive") -> ConflictReport:
    """Sum the within-group conflicts of a partition."""
    conflicts = tuple(group_conflict(pool, g) for g in partition.groups)
    return ConflictReport(partition, conflicts, fsum(conflicts), method)


def partitions_into(n: int, k: int) -> Iterator[Partition]:
    """All partitions of ``range(n)`` into exactly ``k`` nonempty groups.

    Enumerated through restricted growth strings in lexicographic order,
    which yields each partition exactly once, already in canonical form.
    """
    if not 1 <= k <= n:
        return
    assignment = [0] * n

    def rec(i: int, used: int) -> Iterator[Partition]:
        if i == n:
            if used == k:
                yield Partition.from_assignment(assignment)
            return
        # prune: remaining positions must be able to open the missing groups
        if used + (n - i) < k:
            return
        for g in range(min(used + 1, k)):
            assignment[i] = g
            yield from rec(i + 1, max(used, g + 1))

    yield from rec(0, 0)


def best_partition(pool: EvidencePool, k: int, *, force: str | None = None,
                   seed: int = 0) -> ConflictReport:
    """Partition into exactly ``k`` groups minimizing total conflict.

    Exhaustive for pools of up to 12 sources (ties resolved in favor of
    the first partition in restricted-growth-string order), otherwise a
    seeded greedy-plus-local-moves heuristic whose report is flagged with
    ``method="heuristic"``.  ``force`` overrides the size cutoff with
    ``"exhaustive"`` or ``"heuristic"``.
    """
    n = len(pool)
    if not 1 <= k <= n:
        raise KTooLargeError(f"cannot split {n} sources into {k} nonempty groups")
    cache: dict[tuple[int, ...], float] = {}

    def conflict_of(group: tuple[int, ...]) -> float:
        if group not in cache:
            cache[group] = group_conflict(pool, group)
        return cache[group]

    method = force if force is not None else (
        "exhaustive" if n <= EXHAUSTIVE_LIMIT else "heuristic")
    if method == "exhaustive":
        best: Partition | None = None
        best_total = float("inf")
        for part in partitions_into(n, k):
            total = fsum(conflict_of(g) for g in part.groups)
            if total < best_total:
                best, best_total = part, total
        assert best is not None
        return total_conflict(pool, best, method="exhaustive")
    if method == "heuristic":
        part = _heuristic_search(pool, k, seed, conflict_of)
        return total_conflict(pool, part, method="heuristic")
    raise ValueError(f"unknown search method {method!r}")


def _heuristic_search(pool, k, seed, conflict_of) -> Partition:
    n = len(pool)
    rng = random.Random(seed)
    best_key: tuple | None = None
    best_part: Partition | None = None
    for restart in range(HEURISTIC_RESTARTS):
        order = list(range(n))
        if restart:
            rng.shuffle(order)
        groups = _greedy_seed(order, k, conflict_of)
        groups = _local_moves(groups, k, conflict_of)
        part = Partition.of(g for g in groups if g)
        total = fsum(conflict_of(g) for g in part.groups)
        key = (total, part.groups)
        if best_key is None or key < best_key:
            best_key, best_part = key, part
    assert best_part is not None
    return best_part


def _greedy_seed(order, k, conflict_of):
    """Assign sources in the given order to the group with the smallest
    incremental conflict, opening new groups while feasibility requires."""
    groups: list[list[int]] = [[] for _ in range(k)]
    n_open = 0
    for idx, src in enumerate(order):
        remaining = len(order) - idx - 1
        must_open = n_open < k and remaining < k - n_open
        best_g, best_cost = None, float("inf")
        if not must_open:
            for g in range(n_open):
                new = tuple(sorted(groups[g] + [src]))
                cost = conflict_of(new) - conflict_of(tuple(sorted(groups[g])))
                if cost < best_cost - 1e-15:
                    best_g, best_cost = g, cost
        if n_open < k:
            cost = conflict_of((src,))
            if best_g is None or cost < best_cost - 1e-15:
                best_g, best_cost = n_open, cost
        if best_g == n_open:
            n_open += 1
        groups[best_g].append(src)
    return groups


def _local_moves(groups, k, conflict_of):
    """First-improvement single-source moves until a local optimum."""
    improved = True
    while improved:
        improved = False
        for gi in range(k):
            if len(groups[gi]) <= 1:
                continue
            for src in list(groups[gi]):
                base = tuple(sorted(groups[gi]))
                without = tuple(sorted(x for x in groups[gi] if x != src))
                gain_out = conflict_of(without) - conflict_of(base)
                for gt in range(k):
                    if gt == gi:
                        continue
                    target = tuple(sorted(groups[gt]))
                    cost_in = conflict_of(tuple(sorted(groups[gt] + [src]))) \
                        - conflict_of(target)
                    if gain_out + cost_in < -1e-12:
                        groups[gi].remove(src)
                        groups[gt].append(src)
                        improved = True
                        break
                if improved:
                    break
            if improved:
                break
    return groups


def suggest_source_count(pool: EvidencePool, k_max: int | None = None,
                         threshold: float = 0.05, *, force: str | None = None,
                         seed: int = 0) -> tuple[int, ConflictReport]:
    """Smallest number of groups whose best partition keeps the total
    conflict at or below ``threshold``.

    If no group count within ``k_max`` reaches the tolerance, the count
    with the smallest total is returned (smallest count on ties).
    """
    n = len(pool)
    if k_max is None:
        k_max = n
    if not 1 <= k_max <= n:
        raise KTooLargeError(f"k_max must be in 1..{n}, got {k_max}")
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    fallback: tuple[int, ConflictReport] | None = None
    for k in range(1, k_max + 1):
        report = best_partition(pool, k, force=force, seed=seed)
        if report.total <= threshold:
            return k, report
        if fallback is None or report.total < fallback[1].total - 1e-15:
            fallback = (k, report)
    assert fallback is not None
    return fallback
