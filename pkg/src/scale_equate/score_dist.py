"""Weighted raw-score distributions and continuized percentile ranks.

Discrete scores are continuized with a uniform kernel of width one centred
on each integer score, so the percentile-rank function is piecewise linear
on ``[-0.5, K + 0.5]`` with knots at the half-integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError
from .ingest import RawScoreVector


@dataclass(frozen=True, eq=False)
class ScoreDistribution:
    probs: np.ndarray
    total_weight: float
    mean: float
    sd: float

    @property
    def max_score(self) -> int:
        return len(self.probs) - 1

    @property
    def cdf(self) -> np.ndarray:
        c = np.minimum(np.cumsum(self.probs), 1.0)
        c[-1] = 1.0
        return c

    @property
    def knots(self) -> np.ndarray:
        """Percentile ranks at the half-integer knots ``-0.5, 0.5, ..., K + 0.5``."""
        c = np.empty(len(self.probs) + 1)
        c[0] = 0.0
        c[1:] = 100.0 * self.cdf
        return np.maximum.accumulate(c)

    def tail(self, s: int) -> float:
        """Probability mass at or above score ``s``."""
        if s <= 0:
            return 1.0
        if s > self.max_score:
            return 0.0
        return float(self.probs[s:].sum())

    @classmethod
    def from_probs(cls, probs, total_weight: float = 1.0) -> "ScoreDistribution":
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or p.size < 1 or np.any(p < 0) or not np.all(np.isfinite(p)):
            raise DegenerateInputError("score probabilities must be finite and >= 0")
        s = p.sum()
        if s <= 0:
            raise DegenerateInputError("score probabilities sum to zero")
        p = p / s
        k = np.arange(p.size)
        mean = float(np.dot(k, p))
        var = float(np.dot((k - mean) ** 2, p))
        p.flags.writeable = False
        return cls(p, float(total_weight), mean, math.sqrt(max(var, 0.0)))


def distribution(scores: RawScoreVector) -> ScoreDistribution:
    """Weighted relative frequencies of each raw score 0..K with population moments."""
    w = np.asarray(scores.weights, dtype=float)
    total = float(w.sum())
    if w.size == 0 or total <= 0:
        raise DegenerateInputError("zero total weight: no included respondents")
    counts = np.bincount(scores.scores, weights=w, minlength=scores.max_score + 1)
    return ScoreDistribution.from_probs(counts / total, total)


def percentile_rank(d: ScoreDistribution, x: float) -> float:
    c = d.knots
    K = d.max_score
    x = min(max(float(x), -0.5), K + 0.5)
    k = min(int(math.floor(x + 0.5)), K)
    frac = x - (k - 0.5)
    return float(c[k] + frac * (c[k + 1] - c[k]))


def inverse_percentile_rank(d: ScoreDistribution, p: float) -> float:
    """Score whose percentile rank is ``p``.

    Where the percentile rank is flat at ``p`` (zero-mass scores) the
    midpoint of the flat stretch is returned; ``p <= 0`` and ``p >= 100``
    map to the range ends ``-0.5`` and ``K + 0.5``.
    """
    c = d.knots
    K = d.max_score
    p = float(p)
    if p <= 0.0:
        return -0.5
    if p >= 100.0:
        return K + 0.5
    # smallest x with PR(x) >= p
    i = int(np.searchsorted(c, p, side="left"))
    lo = (i - 1.5) + (p - c[i - 1]) / (c[i] - c[i - 1])
    # largest x with PR(x) <= p
    j = int(np.searchsorted(c, p, side="right")) - 1
    hi = (j - 0.5) + (p - c[j]) / (c[j + 1] - c[j])
    return 0.5 * (lo + hi)
