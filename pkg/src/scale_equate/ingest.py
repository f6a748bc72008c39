"""Response data and scale definitions: loading, validation, scoring."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np
import yaml

from .errors import ConfigError, DegenerateInputError, ParseError, SchemaError

MissingPolicy = Literal["exclude", "as-denied"]
MISSING_POLICIES: tuple[str, ...] = ("exclude", "as-denied")
WEIGHT_COLUMN = "weight"

_AFFIRMED = {"1", "yes"}
_DENIED = {"0", "no"}
_MISSING = {"", "na"}


@dataclass(frozen=True)
class ItemDef:
    code: str
    prompt: str = ""
    children_referenced: bool = False
    unique_a_priori: bool = False


@dataclass(frozen=True)
class ScaleDefinition:
    """Ordered item metadata defining one test form."""

    scale_id: str
    items: tuple[ItemDef, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        codes = [it.code for it in self.items]
        if len(codes) < 2:
            raise SchemaError(f"scale {self.scale_id!r} needs at least 2 items")
        dup = sorted({c for c in codes if codes.count(c) > 1})
        if dup:
            raise SchemaError(f"duplicate item codes in scale {self.scale_id!r}: {dup}")

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(it.code for it in self.items)

    @property
    def children_referenced(self) -> tuple[str, ...]:
        return tuple(it.code for it in self.items if it.children_referenced)

    @property
    def household_items(self) -> tuple[str, ...]:
        return tuple(it.code for it in self.items if not it.children_referenced)

    @property
    def unique_a_priori(self) -> tuple[str, ...]:
        return tuple(it.code for it in self.items if it.unique_a_priori)

    def subset(self, keep: Iterable[str], scale_id: str | None = None) -> "ScaleDefinition":
        keep = set(keep)
        unknown = keep - set(self.codes)
        if unknown:
            raise SchemaError(f"unknown item codes: {sorted(unknown)}")
        return ScaleDefinition(scale_id or self.scale_id,
                               tuple(it for it in self.items if it.code in keep))


def _as_bool(value, key: str, code: str) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.strip().lower() in ("true", "false"):
        return value.strip().lower() == "true"
    raise SchemaError(f"item {code!r}: {key} must be true/false, got {value!r}")


def load_scale(path: str | Path) -> ScaleDefinition:
    """Read a YAML scale definition.

    Layout::

        scale_id: ELCSA
        items:
          - code: WORRIED
            children_referenced: false
            unique_a_priori: false
            prompt: optional text
    """
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise SchemaError(f"{path}: not valid YAML ({exc})") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("items"), list):
        raise SchemaError(f"{path}: expected a mapping with an 'items' list")
    items = []
    for entry in doc["items"]:
        if not isinstance(entry, dict) or "code" not in entry:
            raise SchemaError(f"{path}: every item needs a 'code'")
        code = str(entry["code"])
        items.append(ItemDef(
            code=code,
            prompt=str(entry.get("prompt", "") or ""),
            children_referenced=_as_bool(entry.get("children_referenced", False),
                                         "children_referenced", code),
            unique_a_priori=_as_bool(entry.get("unique_a_priori", False),
                                     "unique_a_priori", code),
        ))
    return ScaleDefinition(str(doc.get("scale_id", path.stem)), tuple(items))


def write_scale(scale: ScaleDefinition, path: str | Path) -> None:
    doc = {"scale_id": scale.scale_id, "items": []}
    for it in scale.items:
        entry = {"code": it.code,
                 "children_referenced": it.children_referenced,
                 "unique_a_priori": it.unique_a_priori}
        if it.prompt:
            entry["prompt"] = it.prompt
        doc["items"].append(entry)
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False), encoding="utf-8")


@dataclass(frozen=True, eq=False)
class ResponseMatrix:
    """Respondents x items dichotomous answers.

    ``cells`` holds 1.0 (affirmed), 0.0 (denied) or NaN (missing). Arrays are
    read-only once constructed.
    """

    items: tuple[str, ...]
    cells: np.ndarray
    weights: np.ndarray
    scale_id: str = ""

    def __post_init__(self):
        cells = np.array(self.cells, dtype=float, copy=True)
        weights = np.array(self.weights, dtype=float, copy=True)
        object.__setattr__(self, "items", tuple(self.items))
        if cells.ndim != 2 or cells.shape[1] != len(self.items):
            raise SchemaError(f"cells must be n x {len(self.items)}, got {cells.shape}")
        if weights.shape != (cells.shape[0],):
            raise SchemaError("one weight per respondent required")
        ok = np.isnan(cells) | (cells == 0) | (cells == 1)
        if not ok.all():
            raise ParseError("cells must be 0, 1 or missing")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ParseError("weights must be finite and non-negative")
        if len(set(self.items)) != len(self.items):
            raise SchemaError("duplicate item codes")
        cells.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "weights", weights)

    @property
    def n_respondents(self) -> int:
        return self.cells.shape[0]

    @property
    def n_items(self) -> int:
        return len(self.items)

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.cells)

    def take_rows(self, index: np.ndarray) -> "ResponseMatrix":
        return ResponseMatrix(self.items, self.cells[index], self.weights[index],
                              self.scale_id)

    def with_weights(self, weights) -> "ResponseMatrix":
        return ResponseMatrix(self.items, self.cells, weights, self.scale_id)


def load_responses(path: str | Path, scale: ScaleDefinition,
                   policy: MissingPolicy = "exclude") -> ResponseMatrix:
    """Read a comma-delimited response file for ``scale``.

    ``policy`` is validated here so a bad value fails before any analysis;
    it is applied later by :func:`score` and the estimators.
    """
    if policy not in MISSING_POLICIES:
        raise ConfigError(f"unknown missing-data policy {policy!r}")
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not any(h.strip() for h in header):
            raise SchemaError(f"{path}: empty file, no header row")
        header = [h.strip() for h in header]
        seen = set()
        for h in header:
            if h in seen:
                raise SchemaError(f"{path}: duplicate header column {h!r}")
            seen.add(h)
        known = set(scale.codes) | {WEIGHT_COLUMN}
        unknown = [h for h in header if h not in known]
        if unknown:
            raise SchemaError(f"{path}: unknown item columns {unknown}")
        absent = [c for c in scale.codes if c not in seen]
        if absent:
            raise SchemaError(f"{path}: missing item columns {absent}")
        col = {h: i for i, h in enumerate(header)}
        w_idx = col.get(WEIGHT_COLUMN)
        rows, weights = [], []
        for rownum, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", rownum)
            cells = []
            for code in scale.codes:
                raw = row[col[code]].strip().lower()
                if raw in _AFFIRMED:
                    cells.append(1.0)
                elif raw in _DENIED:
                    cells.append(0.0)
                elif raw in _MISSING:
                    cells.append(np.nan)
                else:
                    raise ParseError(f"item {code!r}: unrecognised value {row[col[code]]!r}",
                                     rownum)
            if w_idx is None:
                w = 1.0
            else:
                try:
                    w = float(row[w_idx])
                except ValueError:
                    raise ParseError(f"non-numeric weight {row[w_idx]!r}", rownum) from None
                if not np.isfinite(w) or w < 0:
                    raise ParseError(f"weight must be finite and >= 0, got {w}", rownum)
            rows.append(cells)
            weights.append(w)
    cells = np.array(rows, dtype=float).reshape(len(rows), len(scale.codes))
    return ResponseMatrix(scale.codes, cells, np.array(weights, dtype=float), scale.scale_id)


def write_responses(m: ResponseMatrix, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(m.items) + [WEIGHT_COLUMN])
        for cells, w in zip(m.cells, m.weights):
            writer.writerow(["NA" if np.isnan(c) else str(int(c)) for c in cells]
                            + [repr(float(w))])


def restrict_to_items(m: ResponseMatrix, keep: Sequence[str]) -> ResponseMatrix:
    """Column-filter ``m`` to ``keep``, preserving the matrix's item order."""
    keep = list(keep)
    if not keep:
        raise SchemaError("restrict_to_items needs at least one item")
    unknown = [c for c in keep if c not in m.items]
    if unknown:
        raise SchemaError(f"unknown item codes: {unknown}")
    wanted = set(keep)
    idx = [j for j, c in enumerate(m.items) if c in wanted]
    return ResponseMatrix(tuple(m.items[j] for j in idx), m.cells[:, idx], m.weights,
                          m.scale_id)


@dataclass(frozen=True, eq=False)
class RawScoreVector:
    """Raw scores of the included respondents plus exclusion bookkeeping."""

    scores: np.ndarray
    weights: np.ndarray
    max_score: int
    included: np.ndarray = field(repr=False)
    excluded_weight: float = 0.0
    policy: str = "exclude"

    @property
    def n_excluded(self) -> int:
        return int((~self.included).sum())


def complete_cases(m: ResponseMatrix, policy: MissingPolicy = "exclude"
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Apply the missing-data policy.

    Returns ``(x, w, included)`` with ``x`` an int8 matrix of the retained
    rows. Rows where every cell is missing are always dropped.
    """
    if policy not in MISSING_POLICIES:
        raise ConfigError(f"unknown missing-data policy {policy!r}")
    miss = m.missing
    if policy == "exclude":
        included = ~miss.any(axis=1)
    else:
        included = ~miss.all(axis=1)
    x = np.nan_to_num(m.cells[included], nan=0.0).astype(np.int8)
    return x, m.weights[included], included


def score(m: ResponseMatrix, policy: MissingPolicy = "exclude") -> RawScoreVector:
    x, w, included = complete_cases(m, policy)
    scores = x.sum(axis=1, dtype=np.int64)
    excluded_weight = float(m.weights[~included].sum())
    return RawScoreVector(scores, w, m.n_items, included, excluded_weight, policy)


def check_weights(w: np.ndarray) -> None:
    if w.size == 0 or not np.any(w > 0):
        raise DegenerateInputError("no included respondent carries positive weight")
