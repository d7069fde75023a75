"""Synthetic benchmark studies for the partially-supervised classifier.

Five Gaussian-mixture studies probe the classifier: three-class triangle
data with pairwise class-set labels, collinear classes whose middle class
is only known up to a pair, five well-separated classes with coin-flip
label sets, a precisely labeled triangle under growing variance, and a
robustness scenario with unequal covariances.  Each study compares the
evidential classifier (trained on the partial labels) against a pooled
covariance linear discriminant trained on the true labels.

Datasets are reproducible across platforms: draws come from a Philox
counter stream keyed by ``(master seed, replication)``, turned into
uniforms in (0, 1) from the top 53 bits and into normals through the
inverse normal CDF.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import ndtri

from tbmkit.core import BeliefError, Frame
from tbmkit.classifier import (
    ClassifierConfig,
    LabeledCase,
    LearningSet,
    TUNING_GRID_DEFAULT,
    evaluate_pcc,
    tune_a,
)


class BadSpecError(BeliefError):
    """A generator specification is internally inconsistent."""


class SingularPooledCovarianceError(BeliefError):
    """The pooled within-class covariance is not positive definite."""


#: Variance levels of the growing-variance study.
SIGMA2_LEVELS = (10, 15, 20, 25, 30, 50)


def stream(seed: int, replication: int = 0) -> np.random.Generator:
    """Counter-based random stream for one (seed, replication) pair."""
    key = np.array([seed, replication], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def standard_normals(rng: np.random.Generator, shape) -> np.ndarray:
    """Normals via inverse CDF of open-interval uniforms (reproducible
    from the documented Philox stream alone)."""
    u = (rng.integers(0, 1 << 53, size=shape, dtype=np.int64) + 0.5) / (1 << 53)
    return ndtri(u)


@dataclass(frozen=True)
class GaussianMixtureSpec:
    """Class means and covariances of one synthetic study."""

    labels: tuple[str, ...]
    means: np.ndarray          # (k, p)
    covariances: np.ndarray    # (k, p, p)
    cases_per_class: int

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        covs = np.asarray(self.covariances, dtype=float)
        if means.ndim != 2 or len(means) != len(self.labels):
            raise BadSpecError("one mean vector per class required")
        if covs.shape != (len(self.labels), means.shape[1], means.shape[1]):
            raise BadSpecError("one covariance matrix per class required")
        for c in covs:
            if not np.allclose(c, c.T):
                raise BadSpecError("covariances must be symmetric")
            try:
                np.linalg.cholesky(c)
            except np.linalg.LinAlgError:
                raise BadSpecError("covariances must be positive definite") from None
        if self.cases_per_class < 1:
            raise BadSpecError("need at least one case per class")
        means.setflags(write=False)
        covs.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covariances", covs)

    @property
    def frame(self) -> Frame:
        return Frame(self.labels)


# -- partially-known-class schemes ---------------------------------------


class Exact:
    """Every case keeps its precise singleton label."""

    def assign(self, frame: Frame, true_idx: np.ndarray, rng) -> list[int]:
        return [1 << int(t) for t in true_idx]


class SplitPairs:
    """Each class's cases are split into equal parts, part ``j`` labeled
    with the pair {true class, j-th other class} (in label order)."""

    def assign(self, frame: Frame, true_idx: np.ndarray, rng) -> list[int]:
        n_classes = len(frame)
        masks = [0] * len(true_idx)
        for c in range(n_classes):
            positions = np.flatnonzero(true_idx == c)
            others = [o for o in range(n_classes) if o != c]
            parts = np.array_split(positions, len(others))
            for other, part in zip(others, parts):
                for pos in part:
                    masks[pos] = (1 << c) | (1 << other)
        return masks


class MiddleClass:
    """All classes are precisely labeled except the middle one, whose
    cases are split into pairs with each of the other classes.

    The middle class defaults to the last label.
    """

    def __init__(self, middle: str | None = None):
        self.middle = middle

    def assign(self, frame: Frame, true_idx: np.ndarray, rng) -> list[int]:
        middle = frame.index(self.middle) if self.middle else len(frame) - 1
        masks = [0] * len(true_idx)
        others = [o for o in range(len(frame)) if o != middle]
        positions = np.flatnonzero(true_idx == middle)
        parts = np.array_split(positions, len(others))
        for i, t in enumerate(true_idx):
            if t != middle:
                masks[i] = 1 << int(t)
        for other, part in zip(others, parts):
            for pos in part:
                masks[pos] = (1 << middle) | (1 << other)
        return masks


class CoinFlip:
    """Each non-true class joins the label set on a fair coin flip.

    One uniform draw is consumed per class per case (row by row, classes
    in label order); the draw at the true class's position is ignored, so
    the true class is always a member.
    """

    def assign(self, frame: Frame, true_idx: np.ndarray, rng) -> list[int]:
        draws = rng.random((len(true_idx), len(frame)))
        masks = []
        for i, t in enumerate(true_idx):
            mask = 1 << int(t)
            for c in range(len(frame)):
                if c != t and draws[i, c] < 0.5:
                    mask |= 1 << c
            masks.append(mask)
        return masks


class DataSplit(NamedTuple):
    """One replication's data: a fitted learning set (with partial
    labels), the true labels of its cases, and the held-out test set."""

    learning_set: LearningSet
    train_true_labels: list[str]
    test_features: np.ndarray
    test_labels: list[str]


def generate(spec: GaussianMixtureSpec, scheme, seed: int,
             train_per_class: int, replication: int = 0) -> DataSplit:
    """Draw one replication and split it into train and test.

    All cases receive their partial label set first; ``train_per_class``
    cases per class are then selected at random into the learning set and
    the rest form the test set, which keeps true labels only.
    """
    if not 1 <= train_per_class < spec.cases_per_class:
        raise BadSpecError("train_per_class must leave room for a test set")
    rng = stream(seed, replication)
    frame = spec.frame
    k, p = spec.means.shape
    blocks = []
    for c in range(k):
        z = standard_normals(rng, (spec.cases_per_class, p))
        chol = np.linalg.cholesky(spec.covariances[c])
        blocks.append(z @ chol.T + spec.means[c])
    features = np.vstack(blocks)
    true_idx = np.repeat(np.arange(k), spec.cases_per_class)
    pkc_masks = scheme.assign(frame, true_idx, rng)

    train_positions = []
    for c in range(k):
        members = np.flatnonzero(true_idx == c)
        chosen = rng.permutation(members)[:train_per_class]
        train_positions.extend(int(i) for i in chosen)
    train_positions.sort()
    test_positions = sorted(set(range(len(features))) - set(train_positions))

    cases = [LabeledCase(features[i], pkc_masks[i]) for i in train_positions]
    return DataSplit(
        learning_set=LearningSet(frame, cases),
        train_true_labels=[frame.labels[true_idx[i]] for i in train_positions],
        test_features=features[test_positions],
        test_labels=[frame.labels[true_idx[i]] for i in test_positions],
    )


# -- linear-discriminant baseline ----------------------------------------


def lda_baseline(frame: Frame, train_features, train_labels, test_features,
                 test_labels, ridge: float = 1e-3) -> float:
    """PCC of a pooled-covariance linear discriminant with equal priors,
    trained on true labels.

    The pooled covariance gets the same relative ridge as the
    classifier's local covariances.
    """
    train_features = np.asarray(train_features, dtype=float)
    test_features = np.asarray(test_features, dtype=float)
    test_labels = list(test_labels)
    if not len(test_labels):
        raise ValueError("cannot score an empty test set")
    y = np.array([frame.index(lab) for lab in train_labels])
    k = len(frame)
    p = train_features.shape[1]
    means = np.vstack([train_features[y == c].mean(axis=0) for c in range(k)])
    pooled = np.zeros((p, p))
    for c in range(k):
        centered = train_features[y == c] - means[c]
        pooled += centered.T @ centered
    pooled /= max(len(train_features) - k, 1)
    pooled += ridge * (np.trace(pooled) / p) * np.eye(p)
    try:
        np.linalg.cholesky(pooled)
    except np.linalg.LinAlgError:
        raise SingularPooledCovarianceError(
            "pooled covariance is singular; raise the ridge") from None
    inv = np.linalg.inv(pooled)
    scores = test_features @ inv @ means.T \
        - 0.5 * np.einsum("cp,pq,cq->c", means, inv, means)
    predictions = scores.argmax(axis=1)  # argmax takes the lowest index on ties
    truth = np.array([frame.index(lab) for lab in test_labels])
    return 100.0 * float((predictions == truth).mean())


# -- the five case studies ------------------------------------------------


@dataclass(frozen=True)
class CaseStudy:
    spec: GaussianMixtureSpec
    scheme: object
    train_per_class: int


def case_study(case_id: int, sigma2: float = 10.0,
               variant: str = "unequal") -> CaseStudy:
    """Definition of one numbered study.

    ``sigma2`` applies to study 4 (variance level); ``variant`` to study
    5 (``"equal"`` spherical covariances or the ``"unequal"`` robustness
    configuration).
    """
    eye2 = np.eye(2)
    if case_id == 1:
        spec = GaussianMixtureSpec(
            labels=("A", "B", "C"),
            means=np.array([[0.0, 0.0], [4.0, 0.0], [2.0, 2.0]]),
            covariances=np.stack([eye2] * 3),
            cases_per_class=200)
        return CaseStudy(spec, SplitPairs(), 20)
    if case_id == 2:
        spec = GaussianMixtureSpec(
            labels=("A", "B", "C"),
            means=np.array([[-3.0, 0.0], [3.0, 0.0], [0.0, 0.0]]),
            covariances=np.stack([eye2] * 3),
            cases_per_class=100)
        return CaseStudy(spec, MiddleClass("C"), 30)
    if case_id == 3:
        spec = GaussianMixtureSpec(
            labels=("A", "B", "C", "D", "E"),
            means=2.0 * np.sqrt(2.0) * np.eye(5),
            covariances=np.stack([np.eye(5)] * 5),
            cases_per_class=100)
        return CaseStudy(spec, CoinFlip(), 30)
    if case_id == 4:
        spec = GaussianMixtureSpec(
            labels=("A", "B", "C"),
            means=np.array([[0.0, 0.0], [10.0, 0.0], [5.0, 5.0]]),
            covariances=np.stack([sigma2 * eye2] * 3),
            cases_per_class=200)
        return CaseStudy(spec, Exact(), 20)
    if case_id == 5:
        if variant == "equal":
            covs = np.stack([50.0 * eye2] * 3)
        elif variant == "unequal":
            covs = np.stack([10.0 * eye2, np.diag([10.0, 1.0]), 10.0 * eye2])
        else:
            raise BadSpecError(f"unknown study-5 variant {variant!r}")
        spec = GaussianMixtureSpec(
            labels=("A", "B", "C"),
            means=np.array([[10.0, 0.0], [20.0, 0.0], [30.0, 0.0]]),
            covariances=covs,
            cases_per_class=100)
        return CaseStudy(spec, Exact(), 30)
    raise BadSpecError(f"unknown case study {case_id}")


class ReplicationRow(NamedTuple):
    replication: int
    tuned_a: float
    tbm_pcc: float
    baseline_pcc: float


@dataclass(frozen=True)
class ExperimentResult:
    case_id: int
    rows: tuple[ReplicationRow, ...]

    def _column(self, name: str) -> list[float]:
        return [getattr(r, name) for r in self.rows]

    def mean(self, name: str) -> float:
        return float(np.mean(self._column(name)))

    def summary(self) -> dict[str, float]:
        out = {}
        for name in ("tbm_pcc", "baseline_pcc"):
            col = self._column(name)
            out[f"{name}_mean"] = float(np.mean(col))
            out[f"{name}_min"] = float(np.min(col))
            out[f"{name}_max"] = float(np.max(col))
        return out


def run_case_study(case_id: int, replications: int, seed: int = 0, *,
                   sigma2: float = 10.0, variant: str = "unequal",
                   grid: Sequence[float] = TUNING_GRID_DEFAULT,
                   base_config: ClassifierConfig = ClassifierConfig()) -> ExperimentResult:
    """Run one study: per replication, tune the discount slope on the
    learning set, score the classifier on the test set, and score the
    true-label linear discriminant on the same split."""
    if replications < 1:
        raise ValueError("need at least one replication")
    study = case_study(case_id, sigma2=sigma2, variant=variant)
    rows = []
    for rep in range(replications):
        split = generate(study.spec, study.scheme, seed, study.train_per_class,
                         replication=rep)
        ls = split.learning_set
        a = tune_a(ls, grid, base_config)
        cfg = ClassifierConfig(a=a, k_cov=base_config.k_cov,
                               ridge=base_config.ridge,
                               normalize_combination=base_config.normalize_combination)
        tbm = evaluate_pcc(ls, split.test_features, split.test_labels, cfg)
        baseline = lda_baseline(ls.frame,
                                np.vstack([c.features for c in ls.cases]),
                                split.train_true_labels,
                                split.test_features, split.test_labels,
                                ridge=base_config.ridge)
        rows.append(ReplicationRow(rep, a, tbm, baseline))
    return ExperimentResult(case_id, tuple(rows))
