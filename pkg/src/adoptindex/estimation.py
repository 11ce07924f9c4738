"""Score, pmf, and second-moment estimation from a validated dataset.

The score of a model is the expected stage; its estimate is the column
mean, which is identical to the pmf-weighted stage sum because the cell
counts are exact. Scores are computed as an integer column sum divided
by n once, so both forms agree bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import AdoptionDataset
from .errors import IndexOutOfRange, InsufficientRows


@dataclass(frozen=True)
class ScoreEstimate:
    """Per-model mean stages and the sample size they came from."""

    scores: tuple[float, ...]
    n: int

    @property
    def k(self) -> int:
        return len(self.scores)


@dataclass(frozen=True)
class PmfEstimate:
    """Stage counts and maximum-likelihood probabilities for one model."""

    model_name: str
    counts: tuple[int, ...]
    probabilities: tuple[float, ...]
    n: int

    def mean_stage(self) -> float:
        return float(sum(a * p for a, p in enumerate(self.probabilities)))


@dataclass(frozen=True, eq=False)
class MomentEstimate:
    """Scores plus per-observation covariance and correlation matrices.

    ``cov`` holds unbiased (n-1 denominator) sample covariances of the
    stage columns. ``corr`` entries are NaN wherever either variance is
    zero; ``degenerate`` flags those models. Degeneracy is not an error
    here, only when inference later needs to divide by a variance.
    """

    scores: ScoreEstimate
    cov: np.ndarray
    corr: np.ndarray
    degenerate: tuple[bool, ...]

    def __post_init__(self) -> None:
        cov = np.asarray(self.cov, dtype=float)
        corr = np.asarray(self.corr, dtype=float)
        k = self.scores.k
        if cov.shape != (k, k) or corr.shape != (k, k):
            raise ValueError("moment matrices must be k x k")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ValueError("covariance matrix must be symmetric")
        if np.any(np.diag(cov) < 0):
            raise ValueError("variances must be non-negative")
        defined = ~np.isnan(corr)
        if np.any(np.abs(corr[defined]) > 1 + 1e-12):
            raise ValueError("correlations must lie in [-1, 1]")
        cov = cov.copy()
        corr = corr.copy()
        cov.setflags(write=False)
        corr.setflags(write=False)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "corr", corr)
        object.__setattr__(self, "degenerate", tuple(bool(d) for d in self.degenerate))

    @property
    def variances(self) -> tuple[float, ...]:
        return tuple(float(v) for v in np.diag(self.cov))

    @property
    def n(self) -> int:
        return self.scores.n


def estimate_scores(dataset: AdoptionDataset) -> ScoreEstimate:
    """Column means, computed as exact integer sums divided by n."""
    sums = dataset.values.sum(axis=0, dtype=np.int64)
    n = dataset.n
    return ScoreEstimate(scores=tuple(float(s) / n for s in sums), n=n)


def estimate_pmf(dataset: AdoptionDataset, j: int) -> PmfEstimate:
    """Exact stage counts and MLE probabilities for model position ``j``."""
    if not 0 <= j < dataset.spec.k:
        raise IndexOutOfRange(f"model position {j} outside 0..{dataset.spec.k - 1}")
    model = dataset.spec.models[j]
    counts = np.bincount(dataset.values[:, j], minlength=model.m + 1)
    n = dataset.n
    return PmfEstimate(
        model_name=model.name,
        counts=tuple(int(c) for c in counts),
        probabilities=tuple(int(c) / n for c in counts),
        n=n,
    )


def estimate_moments(dataset: AdoptionDataset) -> MomentEstimate:
    """Scores plus unbiased sample covariance and derived correlations.

    Needs n >= 2. Correlations are derived from the covariance matrix and
    clipped into [-1, 1] against rounding; they are NaN where a variance
    is zero.
    """
    n = dataset.n
    if n < 2:
        raise InsufficientRows(f"need at least 2 rows for moments, got {n}")
    scores = estimate_scores(dataset)
    values = dataset.values.astype(float)
    cov = np.atleast_2d(np.cov(values, rowvar=False, ddof=1))
    variances = np.diag(cov)
    degenerate = variances == 0.0
    sd = np.sqrt(variances)
    corr = np.full_like(cov, np.nan)
    ok = ~degenerate
    idx = np.ix_(ok, ok)
    with np.errstate(invalid="ignore", divide="ignore"):
        corr[idx] = cov[idx] / np.outer(sd[ok], sd[ok])
    corr[idx] = np.clip(corr[idx], -1.0, 1.0)
    for j in range(len(variances)):
        if ok[j]:
            corr[j, j] = 1.0
    return MomentEstimate(
        scores=scores,
        cov=cov,
        corr=corr,
        degenerate=tuple(bool(d) for d in degenerate),
    )
