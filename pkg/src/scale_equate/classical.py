"""Observed-score equating: mean, linear and equipercentile."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError
from .score_dist import ScoreDistribution, inverse_percentile_rank, percentile_rank

TABLE_COLUMNS = ("x", "equated", "see", "method", "source", "target")


@dataclass(frozen=True, eq=False)
class EquatingTable:
    """Equated value on the target form for every integer source score."""

    method: str
    source: str
    target: str
    equated: np.ndarray
    see: np.ndarray | None = None
    target_max: int | None = None

    def __post_init__(self):
        e = np.array(self.equated, dtype=float)
        e.flags.writeable = False
        object.__setattr__(self, "equated", e)
        if self.see is not None:
            s = np.array(self.see, dtype=float)
            if s.shape != e.shape:
                raise ValueError("see must align with equated values")
            s.flags.writeable = False
            object.__setattr__(self, "see", s)

    @property
    def scores(self) -> np.ndarray:
        return np.arange(self.equated.size)

    def __getitem__(self, x: int) -> float:
        return float(self.equated[x])

    def with_see(self, see) -> "EquatingTable":
        return replace(self, see=np.asarray(see, dtype=float))

    def clamped(self) -> tuple[np.ndarray, np.ndarray]:
        """Equated values clamped to ``[0, K_target]`` and the mask of clamped rows."""
        if self.target_max is None:
            return self.equated.copy(), np.zeros(self.equated.size, dtype=bool)
        c = np.clip(self.equated, 0.0, self.target_max)
        return c, c != self.equated

    def rows(self):
        for x, e in enumerate(self.equated):
            see = "" if self.see is None else repr(float(self.see[x]))
            yield (x, repr(float(e)), see, self.method, self.source, self.target)


def write_tables(tables, path: str | Path) -> None:
    """Serialise one or more tables to a single delimited file."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS)
        for t in tables:
            writer.writerows(t.rows())


def read_tables(path: str | Path) -> list[EquatingTable]:
    groups: dict[tuple[str, str, str], list[tuple[int, float, str]]] = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = (row["method"], row["source"], row["target"])
            groups.setdefault(key, []).append((int(row["x"]), float(row["equated"]),
                                               row["see"]))
    out = []
    for (method, source, target), rows in groups.items():
        rows.sort()
        see = None if any(r[2] == "" for r in rows) else [float(r[2]) for r in rows]
        out.append(EquatingTable(method, source, target, [r[1] for r in rows], see))
    return out


def mean_coefficients(dX: ScoreDistribution, dY: ScoreDistribution) -> tuple[float, float]:
    return 1.0, dY.mean - dX.mean


def linear_coefficients(dX: ScoreDistribution, dY: ScoreDistribution) -> tuple[float, float]:
    """Slope and intercept of the linear equating function."""
    if dX.sd <= 0:
        raise DegenerateInputError("source distribution has zero standard deviation")
    slope = dY.sd / dX.sd
    return slope, dY.mean - slope * dX.mean


def mean_equate(dX: ScoreDistribution, dY: ScoreDistribution,
                source: str = "X", target: str = "Y") -> EquatingTable:
    _, shift = mean_coefficients(dX, dY)
    x = np.arange(dX.max_score + 1, dtype=float)
    return EquatingTable("mean", source, target, x + shift, target_max=dY.max_score)


def linear_equate(dX: ScoreDistribution, dY: ScoreDistribution,
                  source: str = "X", target: str = "Y") -> EquatingTable:
    slope, intercept = linear_coefficients(dX, dY)
    x = np.arange(dX.max_score + 1, dtype=float)
    return EquatingTable("linear", source, target, slope * x + intercept,
                         target_max=dY.max_score)


def equipercentile_value(dX: ScoreDistribution, dY: ScoreDistribution, x: float) -> float:
    """Equipercentile equivalent of a (possibly non-integer) source score."""
    return inverse_percentile_rank(dY, percentile_rank(dX, x))


def equipercentile_equate(dX: ScoreDistribution, dY: ScoreDistribution,
                          source: str = "X", target: str = "Y") -> EquatingTable:
    e = [equipercentile_value(dX, dY, x) for x in range(dX.max_score + 1)]
    return EquatingTable("equipercentile", source, target, e, target_max=dY.max_score)
