"""Evidential classification from partially known class labels.

Each training case knows only a *set* of classes guaranteed to contain
its true one (its ``pkc``).  Faced with a query, a training case testifies
"the query belongs to my own class set", a statement worth full belief at
distance zero and nothing beyond a cutoff: the case emits a simple
support function on its ``pkc`` with rate ``max(1 - a*d, 0)``, where ``d``
is a locally calibrated Mahalanobis distance.  Pooling all testimonies
conjunctively and taking the pignistic transform gives a probability
distribution over the classes; the decision is its argmax.

Distances are computed in a rescaled feature space (5th percentile at 0,
95th at 1 per feature, fitted on the training set) and calibrated per
training case with the sample covariance of its Euclidean neighborhood,
ridge-regularized to stay invertible.

With fully known singleton labels the scheme reduces to a
distance-weighted evidential nearest-neighbor rule; the interest is that
nothing changes when labels are only known up to a set.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from tbmkit.core import (
    BeliefError,
    Frame,
    MassFunction,
    PignisticDistribution,
    TotalConflictError,
    simple_support,
)

RIDGE_DEFAULT = 1e-3
TUNING_GRID_DEFAULT = (0.1, 0.2, 0.5, 1.0, 2.0, 5.0)


class SingularCovarianceError(BeliefError):
    """A neighborhood covariance matrix is not positive definite."""


class EmptyTestSetError(BeliefError):
    """A classification quality score was requested on no test cases."""


@dataclass(frozen=True, eq=False)
class LabeledCase:
    """One training case: a feature vector and the set of classes known
    to contain its true class (as a subset mask of the class frame)."""

    features: np.ndarray
    pkc: int

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        if feats.ndim != 1:
            raise ValueError("case features must be a vector")
        feats.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "pkc", int(self.pkc))
        if self.pkc == 0:
            raise ValueError("pkc must be a nonempty class set")


@dataclass(frozen=True)
class ClassifierConfig:
    """Hyperparameters of the classifier.

    ``a`` is the slope of the distance discount ``max(1 - a*d, 0)``;
    ``k_cov`` the neighborhood size for the local covariance (defaults to
    ``min(10*p, N)``); ``ridge`` the fraction of the mean variance added
    to the covariance diagonal; ``normalize_combination`` switches the
    pooling from the open-world rule to Dempster normalization (the
    decision is unaffected while any pooled mass survives).
    """

    a: float = 1.0
    k_cov: int | None = None
    ridge: float = RIDGE_DEFAULT
    normalize_combination: bool = False

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("slope a must be positive")
        if self.ridge < 0:
            raise ValueError("ridge must be nonnegative")


class LearningSet:
    """Training cases with a fitted per-feature rescaler.

    The rescaler maps each feature linearly so its 5th percentile lands
    at 0 and its 95th at 1 (percentiles by linear interpolation on the
    sorted sample, inclusive endpoints).  Values outside the anchors
    extrapolate along the same line; a constant feature maps to 0
    everywhere and so never contributes to distances.  The same map is
    applied to every later query.
    """

    __slots__ = ("frame", "cases", "p5", "p95", "_rescaled")

    def __init__(self, frame: Frame, cases: Sequence[LabeledCase]):
        cases = tuple(cases)
        if not cases:
            raise ValueError("learning set needs at least one case")
        p = len(cases[0].features)
        for case in cases:
            if len(case.features) != p:
                raise ValueError("all cases must share the feature dimension")
            frame._check_mask(case.pkc)
        raw = np.vstack([c.features for c in cases])
        p5, p95 = np.percentile(raw, [5, 95], axis=0, method="linear")
        object.__setattr__(self, "frame", frame)
        object.__setattr__(self, "cases", cases)
        object.__setattr__(self, "p5", p5)
        object.__setattr__(self, "p95", p95)
        object.__setattr__(self, "_rescaled", self.rescale(raw))

    def __setattr__(self, name, value):
        raise AttributeError("LearningSet is immutable")

    def __len__(self) -> int:
        return len(self.cases)

    @property
    def n_features(self) -> int:
        return len(self.cases[0].features)

    @property
    def rescaled_features(self) -> np.ndarray:
        return self._rescaled

    @property
    def pkc_masks(self) -> tuple[int, ...]:
        return tuple(c.pkc for c in self.cases)

    def rescale(self, features) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        span = self.p95 - self.p5
        safe = np.where(span == 0, 1.0, span)
        out = np.where(span == 0, 0.0, (features - self.p5) / safe)
        out.setflags(write=False)
        return out


def fit_rescaler(frame: Frame, cases: Sequence[LabeledCase]) -> LearningSet:
    """Fit the percentile rescaler on raw training cases."""
    return LearningSet(frame, cases)


def effective_k_cov(ls: LearningSet, cfg: ClassifierConfig) -> int:
    k = cfg.k_cov if cfg.k_cov is not None else min(10 * ls.n_features, len(ls))
    if k > len(ls):
        raise ValueError(f"k_cov={k} exceeds the {len(ls)} training cases")
    if k < ls.n_features + 1:
        raise ValueError(
            f"k_cov={k} cannot estimate a {ls.n_features}-dimensional covariance")
    return k


def local_covariance(ls: LearningSet, i: int, cfg: ClassifierConfig) -> np.ndarray:
    """Ridge-regularized sample covariance of the ``k_cov`` training
    cases nearest to case ``i`` (itself included), in rescaled space."""
    k = effective_k_cov(ls, cfg)
    X = ls.rescaled_features
    d2 = ((X - X[i]) ** 2).sum(axis=1)
    neighbors = np.argsort(d2, kind="stable")[:k]
    cov = np.atleast_2d(np.cov(X[neighbors], rowvar=False, ddof=1))
    cov = cov + cfg.ridge * (np.trace(cov) / ls.n_features) * np.eye(ls.n_features)
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise SingularCovarianceError(
            f"neighborhood of case {i} has a singular covariance; "
            "raise ridge or k_cov") from None
    return cov


class Classification(NamedTuple):
    """Pooled evidence, its pignistic distribution and the decision."""

    mass: MassFunction
    betp: PignisticDistribution
    label: str


class _Prepared:
    """Per-(learning set, config) arrays shared by the batch paths."""

    __slots__ = ("ls", "cfg", "inv_covs")

    def __init__(self, ls: LearningSet, cfg: ClassifierConfig):
        self.ls = ls
        self.cfg = cfg
        self.inv_covs = np.stack(
            [np.linalg.inv(local_covariance(ls, i, cfg)) for i in range(len(ls))])

    def distances(self, rescaled_query: np.ndarray) -> np.ndarray:
        """Mahalanobis distance from every training case to the query,
        each measured with that case's own local covariance."""
        diff = self.ls.rescaled_features - rescaled_query
        d2 = np.einsum("np,npq,nq->n", diff, self.inv_covs, diff)
        return np.sqrt(np.maximum(d2, 0.0))

    def pool(self, rates: np.ndarray) -> Classification:
        """Fold the simple support functions with the given rates."""
        frame = self.ls.frame
        full = frame.full
        pooled = {full: 1.0}
        for pkc, rate in zip(self.ls.pkc_masks, rates):
            if rate <= 0.0 or pkc == full:  # vacuous testimony, neutral
                continue
            out: dict[int, float] = {}
            for subset, value in pooled.items():
                key = subset & pkc
                out[key] = out.get(key, 0.0) + value * rate
                keep = value * (1.0 - rate)
                if keep > 0.0:
                    out[subset] = out.get(subset, 0.0) + keep
            pooled = out
        if self.cfg.normalize_combination:
            pooled.pop(0, None)
            total = sum(pooled.values())
            if total <= 0.0:
                raise TotalConflictError("all pooled testimonies are contradictory")
            pooled = {k: v / total for k, v in pooled.items()}
        mass = MassFunction(frame, pooled)
        betp = mass.pignistic()
        return Classification(mass, betp, betp.argmax())


def case_evidence(ls: LearningSet, i: int, query_features,
                  cfg: ClassifierConfig) -> MassFunction:
    """Testimony of training case ``i`` about a raw-feature query."""
    q = ls.rescale(np.asarray(query_features, dtype=float))
    diff = ls.rescaled_features[i] - q
    inv = np.linalg.inv(local_covariance(ls, i, cfg))
    d = float(np.sqrt(max(diff @ inv @ diff, 0.0)))
    rate = max(1.0 - cfg.a * d, 0.0)
    return simple_support(ls.frame, ls.cases[i].pkc, rate)


def classify(ls: LearningSet, query_features, cfg: ClassifierConfig) -> Classification:
    """Pool every case's testimony about one raw-feature query and decide."""
    return predict_batch(ls, [query_features], cfg)[0]


def predict_batch(ls: LearningSet, queries, cfg: ClassifierConfig) -> list[Classification]:
    """Classify many raw-feature queries, sharing the covariance work."""
    prepared = _Prepared(ls, cfg)
    out = []
    for q in np.atleast_2d(np.asarray(queries, dtype=float)):
        d = prepared.distances(ls.rescale(q))
        out.append(prepared.pool(np.maximum(1.0 - cfg.a * d, 0.0)))
    return out


def evaluate_pcc(ls: LearningSet, test_features, test_labels,
                 cfg: ClassifierConfig) -> float:
    """Percentage of test cases whose predicted class matches the truth."""
    test_labels = list(test_labels)
    if not test_labels:
        raise EmptyTestSetError("cannot score an empty test set")
    test_features = np.atleast_2d(np.asarray(test_features, dtype=float))
    if len(test_features) != len(test_labels):
        raise ValueError("one label per test case required")
    results = predict_batch(ls, test_features, cfg)
    correct = sum(r.label == lab for r, lab in zip(results, test_labels))
    return 100.0 * correct / len(test_labels)


def tune_a(ls: LearningSet, grid: Sequence[float] = TUNING_GRID_DEFAULT,
           cfg: ClassifierConfig = ClassifierConfig()) -> float:
    """Pick the discount slope by leave-one-out on the learning set.

    For each held-out case the rescaler, covariances and testimonies are
    refitted on the remaining cases; the held-out case is then classified
    and counted correct when the predicted class belongs to its own class
    set (all a partially labeled case can certify).  A held-out
    classification that ends in total conflict counts as incorrect.
    Ties go to the smaller slope.
    """
    grid = sorted(set(float(a) for a in grid))
    if not grid:
        raise ValueError("tuning grid must be nonempty")
    n = len(ls)
    if n < 2:
        return grid[0]
    scores = {a: 0 for a in grid}
    for i in range(n):
        rest = LearningSet(ls.frame, [ls.cases[j] for j in range(n) if j != i])
        prepared = _Prepared(rest, cfg)
        d = prepared.distances(rest.rescale(ls.cases[i].features))
        for a in grid:
            try:
                result = prepared.pool(np.maximum(1.0 - a * d, 0.0))
            except TotalConflictError:
                continue
            if ls.frame.singleton(result.label) & ls.cases[i].pkc:
                scores[a] += 1
    return max(grid, key=lambda a: (scores[a], -a))


# -- CSV case format -----------------------------------------------------
#
# Header: f1,...,fp,pkc -- the pkc cell joins class names with "|"
# (for example "A|C"); test files use the same layout with singleton pkc.


def read_cases_csv(path, frame: Frame | None = None) -> tuple[Frame, list[LabeledCase]]:
    """Load cases from CSV.  Without an explicit frame, the class frame
    is the sorted union of all class names in the file."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "pkc" not in reader.fieldnames:
            raise ValueError(f"{path}: expected a header with feature columns and 'pkc'")
        feature_cols = [c for c in reader.fieldnames if c != "pkc"]
        for row in reader:
            feats = [float(row[c]) for c in feature_cols]
            labels = [x for x in row["pkc"].split("|") if x]
            if not labels:
                raise ValueError(f"{path}: empty pkc cell")
            rows.append((feats, labels))
    if frame is None:
        frame = Frame(sorted({lab for _, labels in rows for lab in labels}))
    cases = [LabeledCase(np.array(f), frame.subset(labels)) for f, labels in rows]
    return frame, cases


def write_cases_csv(path, frame: Frame, cases: Sequence[LabeledCase]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        p = len(cases[0].features) if cases else 0
        writer.writerow([f"f{i + 1}" for i in range(p)] + ["pkc"])
        for case in cases:
            writer.writerow([repr(float(x)) for x in case.features]
                            + ["|".join(frame.members(case.pkc))])
