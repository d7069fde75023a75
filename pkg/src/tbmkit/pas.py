"""Citation-link document support through probabilistic argumentation.

A retrieval engine returns ranked documents; citation links let a
relevant document lend support to the documents it cites.  Each document
``D`` carries an independent retrieval assumption (if it holds, ``D`` is
relevant) whose probability decreases logistically with the document's
rank, and each citation link carries an independent link assumption (if
the citing document is relevant and the link assumption holds, the cited
document is relevant too).

An *argument* for a document is a conjunction of assumptions that forces
its relevance: the retrieval assumption of some origin document plus the
link assumptions along a cycle-free citation path from the origin to the
target (the empty path gives the document's own retrieval assumption).
The document's *degree of support* is the probability that at least one
of its arguments holds, evaluated exactly over the independent assumption
probabilities.  Cycles contribute nothing: an argument that walks a cycle
contains a strictly smaller argument and is absorbed.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from tbmkit.core import BeliefError

#: Logistic-regression defaults for turning a retrieval rank into the
#: probability of the retrieval assumption; fitted on one document
#: collection, so overridable.
DEFAULT_LOGIT_SLOPE = -2.42
DEFAULT_LOGIT_INTERCEPT = 1.11

#: Default probability of a link assumption, a single global value that
#: does not depend on the documents involved.
DEFAULT_LINK_PROBABILITY = 0.2644

#: Beyond this many distinct assumptions the exact evaluation refuses and
#: callers should fall back to Monte Carlo sampling.
MAX_EXACT_VARIABLES = 30


class BadRankError(BeliefError):
    """A document rank below 1 was supplied."""


class UnknownDocumentError(BeliefError):
    """A document id was referenced that the graph does not contain."""


class TooManyVariablesError(BeliefError):
    """The support expression is too wide for exact evaluation."""


class TooManyPathsError(BeliefError):
    """Path enumeration exceeded the configured budget."""


def _logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def alpha_from_rank(rank: float, slope: float = DEFAULT_LOGIT_SLOPE,
                    intercept: float = DEFAULT_LOGIT_INTERCEPT) -> float:
    """Probability of the retrieval assumption of a document at ``rank``.

    Strictly decreasing in the rank (for the default negative slope):
    the best-ranked document gets about .75, rank 10 about .011.
    """
    if rank < 1:
        raise BadRankError(f"ranks start at 1, got {rank}")
    return _logistic(slope * math.log(rank) + intercept)


class CitationGraph:
    """Ranked documents plus directed citation links.

    ``docs`` maps document ids to their retrieval rank (1 = best); a rank
    of ``None`` marks a document the engine did not retrieve, whose
    retrieval assumption then has probability 0.  Links are directed
    ``citing -> cited`` pairs; duplicates are collapsed and self-links
    rejected.  Cycles are fine.
    """

    __slots__ = ("docs", "links", "link_probability", "logit_slope",
                 "logit_intercept", "_incoming")

    def __init__(self, docs: Mapping[str, int | None] | Iterable,
                 links: Iterable[tuple[str, str]],
                 link_probability: float = DEFAULT_LINK_PROBABILITY,
                 logit_slope: float = DEFAULT_LOGIT_SLOPE,
                 logit_intercept: float = DEFAULT_LOGIT_INTERCEPT):
        if not isinstance(docs, Mapping):
            docs = dict(docs)
        clean_docs: dict[str, int | None] = {}
        for doc, rank in docs.items():
            if rank is not None and rank < 1:
                raise BadRankError(f"rank of {doc!r} must be >= 1, got {rank}")
            clean_docs[str(doc)] = rank
        clean_links: list[tuple[str, str]] = []
        seen = set()
        for src, dst in links:
            if src == dst:
                raise ValueError(f"self-link on {src!r} is not allowed")
            for end in (src, dst):
                if end not in clean_docs:
                    raise UnknownDocumentError(f"link references unknown document {end!r}")
            if (src, dst) not in seen:
                seen.add((src, dst))
                clean_links.append((src, dst))
        if not 0.0 <= link_probability <= 1.0:
            raise ValueError("link probability must be in [0, 1]")
        object.__setattr__(self, "docs", clean_docs)
        object.__setattr__(self, "links", tuple(clean_links))
        object.__setattr__(self, "link_probability", link_probability)
        object.__setattr__(self, "logit_slope", logit_slope)
        object.__setattr__(self, "logit_intercept", logit_intercept)
        incoming: dict[str, list[str]] = {doc: [] for doc in clean_docs}
        for src, dst in clean_links:
            incoming[dst].append(src)
        object.__setattr__(self, "_incoming", incoming)

    def __setattr__(self, name, value):
        raise AttributeError("CitationGraph is immutable")

    def alpha(self, doc: str) -> float:
        """Retrieval-assumption probability of one document."""
        if doc not in self.docs:
            raise UnknownDocumentError(f"unknown document {doc!r}")
        rank = self.docs[doc]
        if rank is None:
            return 0.0
        return alpha_from_rank(rank, self.logit_slope, self.logit_intercept)


# Assumption variables: ("a", doc) for retrieval assumptions and
# ("I", citing, cited) for link assumptions.
Variable = tuple


def format_variable(var: Variable) -> str:
    if var[0] == "a":
        return f"a({var[1]})"
    return f"I({var[1]}->{var[2]})"


@dataclass(frozen=True)
class SupportExpression:
    """Minimal monotone disjunction of arguments for one target document.

    ``terms`` holds one frozenset of assumption variables per argument;
    no term subsumes another.  ``probabilities`` gives each variable's
    independent probability.
    """

    target: str
    terms: tuple[frozenset, ...]
    probabilities: Mapping[Variable, float]

    def variables(self) -> tuple[Variable, ...]:
        return tuple(sorted(set(itertools.chain.from_iterable(self.terms))))

    def describe(self) -> str:
        if not self.terms:
            return "false"
        order = lambda v: (v[0] != "a", v)
        return " | ".join(
            "&".join(format_variable(v) for v in sorted(t, key=order))
            for t in self.terms)


def _absorb(terms: Iterable[frozenset]) -> tuple[frozenset, ...]:
    """Drop duplicate terms and terms that contain another term."""
    ordered = sorted(set(terms), key=lambda t: (len(t), sorted(t)))
    kept: list[frozenset] = []
    for term in ordered:
        if not any(k <= term for k in kept):
            kept.append(term)
    return tuple(kept)


def enumerate_arguments(graph: CitationGraph, target: str,
                        max_paths: int | None = None) -> SupportExpression:
    """All arguments for ``target``: one per simple citation path into it.

    Depth-first search walks the incoming links backwards with an on-path
    visited set, so no path revisits a document and cyclic walks are
    never produced.  ``max_paths`` aborts cleanly on graphs too cyclic to
    enumerate.
    """
    if target not in graph.docs:
        raise UnknownDocumentError(f"unknown document {target!r}")
    terms: list[frozenset] = []

    def walk(node: str, on_path: set[str], links_so_far: tuple) -> None:
        terms.append(frozenset({("a", node), *links_so_far}))
        if max_paths is not None and len(terms) > max_paths:
            raise TooManyPathsError(
                f"more than {max_paths} citation paths into {target!r}")
        for src in graph._incoming[node]:
            if src not in on_path:
                walk(src, on_path | {src}, links_so_far + (("I", src, node),))

    walk(target, {target}, ())
    final_terms = _absorb(terms)
    probabilities: dict[Variable, float] = {}
    for term in final_terms:
        for var in term:
            if var[0] == "a":
                probabilities[var] = graph.alpha(var[1])
            else:
                probabilities[var] = graph.link_probability
    return SupportExpression(target=target, terms=final_terms,
                             probabilities=probabilities)


def degree_of_support(expr: SupportExpression,
                      max_variables: int = MAX_EXACT_VARIABLES) -> float:
    """Exact probability that at least one argument holds.

    Recursive Shannon expansion on the most frequent variable, with
    memoization on the canonicalized subexpressions; sound because the
    disjunction is monotone and the variables are independent.
    """
    variables = expr.variables()
    if len(variables) > max_variables:
        raise TooManyVariablesError(
            f"{len(variables)} variables exceed the exact limit of {max_variables}")
    probs = expr.probabilities
    memo: dict[frozenset, float] = {}

    def rec(terms: frozenset) -> float:
        if not terms:
            return 0.0
        if any(not t for t in terms):
            return 1.0
        if terms in memo:
            return memo[terms]
        counts = Counter(v for t in terms for v in t)
        var = max(sorted(counts), key=lambda v: counts[v])
        with_var = frozenset(_absorb(t - {var} if var in t else t for t in terms))
        without_var = frozenset(t for t in terms if var not in t)
        p = probs[var]
        value = p * rec(with_var) + (1.0 - p) * rec(without_var)
        memo[terms] = value
        return value

    return rec(frozenset(_absorb(expr.terms)))


def degree_of_support_mc(expr: SupportExpression, samples: int,
                         seed: int = 0) -> float:
    """Monte Carlo estimate of the degree of support.

    Fallback for expressions too wide for the exact evaluation; the seed
    makes the estimate reproducible.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    if not expr.terms:
        return 0.0
    variables = expr.variables()
    index = {v: i for i, v in enumerate(variables)}
    p = np.array([expr.probabilities[v] for v in variables])
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    hits = 0
    remaining = samples
    while remaining > 0:
        batch = min(remaining, 1 << 17)
        draws = rng.random((batch, len(variables))) < p
        sat = np.zeros(batch, dtype=bool)
        for term in expr.terms:
            cols = [index[v] for v in term]
            sat |= draws[:, cols].all(axis=1)
        hits += int(sat.sum())
        remaining -= batch
    return hits / samples


def support_value(expr: SupportExpression, mc_samples: int | None = None,
                  seed: int = 0) -> float:
    """Exact degree of support, or a seeded Monte Carlo estimate when the
    expression is too wide and a sample count was declared."""
    try:
        return degree_of_support(expr)
    except TooManyVariablesError:
        if mc_samples is None:
            raise
        return degree_of_support_mc(expr, mc_samples, seed)


@dataclass(frozen=True)
class DocumentSupport:
    doc: str
    rank: int | None
    alpha: float
    support: float


def rank_documents(graph: CitationGraph, max_paths: int | None = None,
                   mc_samples: int | None = None,
                   seed: int = 0) -> list[DocumentSupport]:
    """Degree of support of every document, best supported first.

    Ties are broken by document id.  Link assumptions can only add
    support, so a document never scores below its own retrieval
    probability.
    """
    rows = []
    for doc in graph.docs:
        expr = enumerate_arguments(graph, doc, max_paths=max_paths)
        rows.append(DocumentSupport(
            doc=doc, rank=graph.docs[doc], alpha=graph.alpha(doc),
            support=support_value(expr, mc_samples=mc_samples, seed=seed)))
    rows.sort(key=lambda r: (-r.support, r.doc))
    return rows


# -- JSON graph format ---------------------------------------------------
#
# {"docs": [{"id": "D1", "rank": 3}, {"id": "D2"}],
#  "links": [["D1", "D2"]]}
#
# A missing or null rank marks an unretrieved document (alpha = 0).


def graph_from_dict(data: Mapping, **settings) -> CitationGraph:
    try:
        doc_entries = data["docs"]
        link_entries = data.get("links", [])
    except TypeError as exc:
        raise ValueError(f"malformed citation-graph document: {exc}") from exc
    docs: dict[str, int | None] = {}
    for entry in doc_entries:
        doc = str(entry["id"])
        if doc in docs:
            raise ValueError(f"duplicate document id {doc!r}")
        docs[doc] = entry.get("rank")
    links = [(str(a), str(b)) for a, b in link_entries]
    return CitationGraph(docs, links, **settings)


def read_graph(path, **settings) -> CitationGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return graph_from_dict(json.load(fh), **settings)
