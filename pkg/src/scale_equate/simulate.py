"""Synthetic Rasch-conforming response data with known parameters."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .ingest import ResponseMatrix
from .rasch import irf


def make_rng(seed: int) -> np.random.Generator:
    """Portable seeded generator (PCG64) used throughout the package."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class SimSpec:
    severities: Sequence[float]
    n: int
    theta_mean: float = 0.0
    theta_sd: float = 1.0
    thetas: Sequence[float] | None = None
    seed: int = 0
    codes: Sequence[str] | None = None
    weight_sigma: float = 0.0
    scale_id: str = "SIM"

    def validate(self) -> None:
        if self.n < 1:
            raise ConfigError(f"number of respondents must be >= 1, got {self.n}")
        if self.theta_sd < 0:
            raise ConfigError("theta_sd must be >= 0")
        if self.weight_sigma < 0:
            raise ConfigError("weight_sigma must be >= 0")
        b = np.asarray(self.severities, dtype=float)
        if b.ndim != 1 or b.size < 1 or not np.all(np.isfinite(b)):
            raise ConfigError("severities must be a non-empty list of finite values")
        if self.codes is not None and len(self.codes) != b.size:
            raise ConfigError("one item code per severity required")
        if self.thetas is not None and len(self.thetas) != self.n:
            raise ConfigError("explicit thetas must have length n")

    @property
    def item_codes(self) -> tuple[str, ...]:
        if self.codes is not None:
            return tuple(self.codes)
        return tuple(f"ITEM{j + 1}" for j in range(len(self.severities)))


def simulate_responses(spec: SimSpec) -> ResponseMatrix:
    """Draw abilities, then each cell independently with probability irf(theta, b)."""
    spec.validate()
    rng = make_rng(spec.seed)
    b = np.asarray(spec.severities, dtype=float)
    if spec.thetas is not None:
        theta = np.asarray(spec.thetas, dtype=float)
    else:
        theta = rng.normal(spec.theta_mean, spec.theta_sd, size=spec.n)
    u = rng.random((spec.n, b.size))
    cells = (u < irf(theta[:, None], b[None, :])).astype(float)
    if spec.weight_sigma > 0:
        weights = np.exp(rng.normal(0.0, spec.weight_sigma, size=spec.n))
    else:
        weights = np.ones(spec.n)
    return ResponseMatrix(spec.item_codes, cells, weights, spec.scale_id)
