"""Probabilistic prevalence on a common latent metric and raw-score correspondences."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
import yaml
from scipy.special import ndtr

from .errors import ConfigError, CoverageError
from .irt_equate import LinkingTransform
from .rasch import ItemParams, PersonParams
from .score_dist import ScoreDistribution

MODERATE_OR_SEVERE = -0.25
SEVERE = 1.83
DEFAULT_THRESHOLDS: dict[str, float] = {"moderate+severe": MODERATE_OR_SEVERE,
                                        "severe": SEVERE}

ZeroScorePolicy = Literal["pseudo", "secure"]


@dataclass(frozen=True, eq=False)
class GlobalStandard:
    """Reference item severities plus named thresholds on the same metric."""

    codes: tuple[str, ...]
    severities: np.ndarray
    thresholds: dict[str, float]

    def __post_init__(self):
        sev = np.asarray(self.severities, dtype=float)
        if sev.shape != (len(self.codes),) or not np.all(np.isfinite(sev)):
            raise ConfigError("Global Standard severities must be finite, one per item")
        vals = list(self.thresholds.values())
        if any(a >= b for a, b in zip(vals, vals[1:])):
            raise ConfigError("Global Standard thresholds must be strictly increasing")
        object.__setattr__(self, "codes", tuple(self.codes))
        object.__setattr__(self, "severities", sev)

    def item_params(self) -> ItemParams:
        return ItemParams.fixed(self.codes, self.severities)


def load_global_standard(path: str | Path) -> GlobalStandard:
    """Read reference severities from YAML.

    Layout::

        items:
          - {code: WORRIED, severity: -1.2}
          ...
        thresholds:            # optional, defaults to the two built-in values
          moderate+severe: -0.25
          severe: 1.83
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Global Standard file not found: {path}")
    doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    if not isinstance(doc, dict) or not isinstance(doc.get("items"), list):
        raise ConfigError(f"{path}: expected a mapping with an 'items' list")
    try:
        codes = [str(it["code"]) for it in doc["items"]]
        sev = [float(it["severity"]) for it in doc["items"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: every item needs 'code' and numeric 'severity'") from exc
    thresholds = {str(k): float(v)
                  for k, v in (doc.get("thresholds") or DEFAULT_THRESHOLDS).items()}
    return GlobalStandard(tuple(codes), np.array(sev), thresholds)


@dataclass(frozen=True, eq=False)
class PrevalenceResult:
    threshold: float
    prevalence: float
    shares: np.ndarray
    theta: np.ndarray
    se: np.ndarray
    tail: np.ndarray
    zero_score: str = "pseudo"
    pseudo_included: bool = True

    @property
    def scores(self) -> np.ndarray:
        return np.arange(self.shares.size)

    def rows(self):
        for r in self.scores:
            yield (int(r), repr(float(self.shares[r])), repr(float(self.theta[r])),
                   repr(float(self.se[r])), repr(float(self.tail[r])))


def voh_prevalence(p: PersonParams, d: ScoreDistribution, threshold: float,
                   zero_score: ZeroScorePolicy = "pseudo") -> PrevalenceResult:
    """Share of the population beyond ``threshold``.

    Each raw score carries a Gaussian with mean theta_r and sd se_r; the tail
    masses are averaged with the raw-score shares as weights. With
    ``zero_score="secure"`` respondents scoring 0 contribute no tail mass.
    """
    shares = d.probs
    if p.theta.size < shares.size:
        missing = [r for r in range(p.theta.size, shares.size) if shares[r] > 0]
        if missing:
            raise CoverageError(f"no person parameter for raw scores {missing}")
    theta = p.theta[:shares.size]
    se = p.se[:shares.size]
    bad = [r for r in range(shares.size)
           if shares[r] > 0 and not (np.isfinite(theta[r]) and se[r] > 0)]
    if bad:
        raise CoverageError(f"invalid person parameters for raw scores {bad}")
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = ndtr((theta - threshold) / se)
    tail = np.where(shares > 0, tail, 0.0)
    if zero_score == "secure":
        tail = tail.copy()
        tail[0] = 0.0
    elif zero_score != "pseudo":
        raise ConfigError(f"unknown zero-score policy {zero_score!r}")
    prev = float(np.dot(shares, tail))
    return PrevalenceResult(float(threshold), prev, shares, theta, se, tail, zero_score,
                            bool(np.any(p.pseudo[:shares.size] & (shares > 0))))


def write_prevalence(results: Sequence[PrevalenceResult], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("threshold", "r", "share", "theta", "se", "tail"))
        for res in results:
            for row in res.rows():
                writer.writerow((repr(res.threshold),) + row)
        for res in results:
            writer.writerow(("# summary", repr(res.threshold), "prevalence",
                             repr(res.prevalence), "zero_score", res.zero_score))


@dataclass(frozen=True)
class Correspondence:
    threshold: float
    score: int
    distance: float
    tie: bool = False


_TIE_TOL = 1e-12


def _argmin_with_tie(dist: np.ndarray) -> tuple[int, bool]:
    best = float(dist.min())
    hits = np.flatnonzero(dist <= best + _TIE_TOL * max(1.0, abs(best)))
    return int(hits[0]), hits.size > 1


def linking_correspondence(p: PersonParams, link: LinkingTransform,
                           thresholds: Sequence[float]) -> list[Correspondence]:
    """Raw score whose linked ability lies closest to each threshold."""
    theta = link.apply(p.theta)
    out = []
    for t in thresholds:
        dist = np.abs(theta - t)
        r, tie = _argmin_with_tie(dist)
        out.append(Correspondence(float(t), r, float(dist[r]), tie))
    return out


def minimization_correspondence(pr: PrevalenceResult, d: ScoreDistribution) -> Correspondence:
    """Raw-score cut whose deterministic tail share is closest to the prevalence."""
    K = d.max_score
    tails = np.array([d.tail(s) for s in range(1, K + 1)])
    dist = np.abs(tails - pr.prevalence)
    i, tie = _argmin_with_tie(dist)
    return Correspondence(pr.threshold, i + 1, float(dist[i]), tie)
