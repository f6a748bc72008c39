"""Bootstrap standard errors of equating and population-invariance diagnostics."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, ScaleEquateError, UnstablePipelineError
from .ingest import ResponseMatrix

log = logging.getLogger(__name__)

THREADS_ENV = "SCALE_EQUATE_THREADS"
MAX_FAILURE_RATE = 0.10

Pipeline = Callable[[Sequence[ResponseMatrix]], np.ndarray]


@dataclass(frozen=True)
class BootstrapSpec:
    replications: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.replications < 2:
            raise ConfigError("bootstrap needs at least 2 replications")


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    see: np.ndarray
    replicates: np.ndarray
    n_failed: int
    n_requested: int
    failures: tuple[str, ...] = ()


def thread_count(default: int | None = None) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
        return max(1, n)
    return default or min(4, os.cpu_count() or 1)


def replicate_rngs(seed: int, replications: int) -> list[np.random.Generator]:
    """One independent PCG64 stream per replication, spawned from ``seed``.

    Replication ``k`` always receives child ``k`` of the seed sequence, so
    results do not depend on how replications are scheduled.
    """
    children = np.random.SeedSequence(seed).spawn(replications)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def resample(data: Sequence[ResponseMatrix], rng: np.random.Generator) -> list[ResponseMatrix]:
    """Row bootstrap of each form independently, preserving each form's size."""
    return [m.take_rows(rng.integers(0, m.n_respondents, size=m.n_respondents))
            for m in data]


def bootstrap_see(pipeline: Pipeline, data: Sequence[ResponseMatrix],
                  spec: BootstrapSpec = BootstrapSpec(),
                  threads: int | None = None) -> BootstrapResult:
    """Standard deviation over bootstrap replications of the pipeline output.

    Replications whose pipeline raises a package error or a numerical error
    are dropped and counted; more than 10% failures is an error.
    """
    rngs = replicate_rngs(spec.seed, spec.replications)

    def one(k: int):
        sample = resample(data, rngs[k])
        try:
            return np.asarray(pipeline(sample), dtype=float), None
        except (ScaleEquateError, ArithmeticError, np.linalg.LinAlgError) as exc:
            return None, f"replication {k}: {exc}"

    n_threads = thread_count() if threads is None else max(1, threads)
    if n_threads == 1:
        results = [one(k) for k in range(spec.replications)]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(one, range(spec.replications)))

    ok = [r for r, _ in results if r is not None]
    failures = tuple(msg for _, msg in results if msg is not None)
    if len(failures) > MAX_FAILURE_RATE * spec.replications:
        raise UnstablePipelineError("bootstrap pipeline unstable", len(failures),
                                    spec.replications, list(failures[:10]))
    if failures:
        log.warning("%d of %d bootstrap replications failed and were dropped",
                    len(failures), spec.replications)
    reps = np.vstack(ok)
    see = reps.std(axis=0, ddof=1)
    return BootstrapResult(see, reps, len(failures), spec.replications, failures)


@dataclass(frozen=True, eq=False)
class InvarianceReport:
    groups: tuple[str, ...]
    tables: dict[str, np.ndarray]
    max_divergence: np.ndarray
    failed_groups: dict[str, str]

    def rows(self):
        for x, div in enumerate(self.max_divergence):
            yield (x, *(repr(float(self.tables[g][x])) for g in self.groups),
                   repr(float(div)))


def population_invariance_check(pipeline: Pipeline, data: Sequence[ResponseMatrix],
                                labels: Sequence[np.ndarray]) -> InvarianceReport:
    """Run ``pipeline`` per subgroup and report the largest pairwise divergence.

    ``labels`` holds one group-label array per form. Groups the pipeline
    cannot fit are flagged and left out of the divergence.
    """
    if len(labels) != len(data):
        raise ConfigError("one label array per form is required")
    names = sorted({str(g) for lab in labels for g in np.asarray(lab)})
    tables: dict[str, np.ndarray] = {}
    failed: dict[str, str] = {}
    for g in names:
        parts = [m.take_rows(np.flatnonzero(np.asarray(lab).astype(str) == g))
                 for m, lab in zip(data, labels)]
        if any(p.n_respondents == 0 for p in parts):
            failed[g] = "no respondents on at least one form"
            continue
        try:
            tables[g] = np.asarray(pipeline(parts), dtype=float)
        except (ScaleEquateError, ArithmeticError, np.linalg.LinAlgError) as exc:
            failed[g] = str(exc)
    kept = tuple(g for g in names if g in tables)
    if len(kept) < 1:
        raise UnstablePipelineError("no group could be equated", len(failed), len(names))
    stack = np.vstack([tables[g] for g in kept])
    div = stack.max(axis=0) - stack.min(axis=0)
    return InvarianceReport(kept, tables, div, failed)


def reliability_comparison(reliabilities: dict[str, float]) -> dict[str, float]:
    """Side-by-side reliabilities and their largest gap."""
    vals = list(reliabilities.values())
    out = dict(reliabilities)
    out["max_difference"] = max(vals) - min(vals) if vals else 0.0
    return out
