"""IRT true-score equating: anchor selection, Mean/Sigma linking, TCC equating."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classical import EquatingTable
from .errors import AnchorExhaustedError, DegenerateInputError
from .rasch import ItemParams, invert_tcc, tcc

__all__ = [
    "LinkingTransform", "AnchorSelection", "DISPLACEMENT_METRIC",
    "mean_sigma_link", "select_anchor", "tcc", "invert_tcc",
    "irt_true_score_equate", "true_score_at",
]

DISPLACEMENT_METRIC = "|A*b_source + B - b_target| in target-scale logits"


@dataclass(frozen=True, eq=False)
class LinkingTransform:
    """theta_target = slope * theta_source + intercept."""

    slope: float
    intercept: float
    anchors: tuple[str, ...] = ()
    displacements: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if not self.slope > 0:
            raise DegenerateInputError(f"linking slope must be positive, got {self.slope}")
        object.__setattr__(self, "anchors", tuple(self.anchors))
        object.__setattr__(self, "displacements",
                           np.asarray(self.displacements, dtype=float))

    @classmethod
    def identity(cls) -> "LinkingTransform":
        return cls(1.0, 0.0)

    def apply(self, theta):
        return self.slope * np.asarray(theta, dtype=float) + self.intercept

    def invert(self, theta):
        return (np.asarray(theta, dtype=float) - self.intercept) / self.slope

    def inverse(self) -> "LinkingTransform":
        return LinkingTransform(1.0 / self.slope, -self.intercept / self.slope, self.anchors)


def mean_sigma_link(bP, bQ, anchors: Sequence[str] = ()) -> LinkingTransform:
    """Mean/Sigma constants putting scale P onto scale Q from anchor severities."""
    bP = np.asarray(bP, dtype=float)
    bQ = np.asarray(bQ, dtype=float)
    if bP.shape != bQ.shape or bP.size < 2:
        raise DegenerateInputError("Mean/Sigma linking needs >= 2 paired anchor severities")
    sdP = bP.std()
    if sdP <= 0:
        raise DegenerateInputError("anchor severities on the source scale have zero spread")
    A = bQ.std() / sdP
    B = bQ.mean() - A * bP.mean()
    if not A > 0:
        raise DegenerateInputError("anchor severities on the target scale have zero spread")
    return LinkingTransform(A, B, tuple(anchors), np.abs(A * bP + B - bQ))


@dataclass(frozen=True, eq=False)
class AnchorSelection:
    anchors: tuple[str, ...]
    removed: tuple[tuple[str, float], ...]
    tolerance: float
    link: LinkingTransform
    excluded_a_priori: tuple[str, ...] = ()
    metric: str = DISPLACEMENT_METRIC


_TIE_TOL = 1e-12


def _worst(displacements, magnitudes, codes) -> int:
    """Index of the item to drop: largest displacement, then larger |b|, then first code."""
    d = np.asarray(displacements, dtype=float)
    tied = [i for i in range(d.size) if d[i] >= d.max() - _TIE_TOL]
    top = max(magnitudes[i] for i in tied)
    tied = [i for i in tied if magnitudes[i] >= top - _TIE_TOL]
    return min(tied, key=lambda i: codes[i])


def select_anchor(bX: ItemParams, bY: ItemParams, shared: Sequence[str],
                  unique_a_priori: Sequence[str] = (), tol: float = 0.5
                  ) -> AnchorSelection:
    """Iteratively drop the worst-displaced common item until all are within ``tol``.

    The link maps form X's metric onto form Y's. Equal maximal displacements
    are broken by the larger ``|b|`` on form X, then by the code that sorts first.
    """
    unique = set(unique_a_priori)
    current = [c for c in shared if c not in unique]
    excluded = tuple(c for c in shared if c in unique)
    trace: list[tuple[str, float]] = []
    if len(current) < 2:
        raise AnchorExhaustedError("fewer than 2 candidate anchor items", trace)
    while True:
        try:
            link = mean_sigma_link(bX.select(current), bY.select(current), current)
        except DegenerateInputError as exc:
            raise AnchorExhaustedError(f"remaining anchors cannot be linked: {exc}",
                                       trace) from exc
        d = link.displacements
        if np.all(d <= tol):
            return AnchorSelection(tuple(current), tuple(trace), tol, link, excluded)
        worst = _worst(d, [abs(bX[c]) for c in current], current)
        trace.append((current[worst], float(d[worst])))
        del current[worst]
        if len(current) < 2:
            raise AnchorExhaustedError("anchor set shrank below 2 items", trace)


def true_score_at(theta, b) -> float:
    """Expected raw score on a form at an ability already on that form's metric."""
    return float(tcc(theta, b))


def irt_true_score_equate(bX: ItemParams, bY: ItemParams, link: LinkingTransform,
                          source: str = "X", target: str = "Y") -> EquatingTable:
    """True-score equivalents on Y of integer scores on X.

    ``link`` maps X abilities onto Y's metric. Scores 0 and J_X sit outside the
    open range of the TCC and are mapped to 0 and J_Y.
    """
    JX, JY = bX.n_items, bY.n_items
    e = np.empty(JX + 1)
    e[0], e[JX] = 0.0, float(JY)
    for x in range(1, JX):
        theta = invert_tcc(x, bX)
        e[x] = tcc(link.apply(theta), bY)
    return EquatingTable("irt-ts", source, target, e, target_max=JY)
