"""End-to-end analyses built from the primitives: fit, NEAT, single-group, prevalence."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classical import (EquatingTable, equipercentile_equate, linear_equate,
                        mean_equate)
from .errors import ConfigError
from .ingest import (MissingPolicy, ResponseMatrix, ScaleDefinition, complete_cases,
                     restrict_to_items, score)
from .irt_equate import (AnchorSelection, LinkingTransform, irt_true_score_equate,
                         select_anchor, true_score_at)
from .prevalence import (Correspondence, PrevalenceResult, linking_correspondence,
                         minimization_correspondence, voh_prevalence)
from .rasch import (FitReport, ItemParams, PersonParams, estimate_person_params,
                    fit_cml, fit_statistics)
from .resampling import BootstrapResult, BootstrapSpec, bootstrap_see
from .score_dist import ScoreDistribution, distribution

SG_METHODS = ("irt-ts", "mean", "linear", "equipercentile")


@dataclass(frozen=True, eq=False)
class FormFit:
    items: ItemParams
    persons: PersonParams
    fit: FitReport | None
    dist: ScoreDistribution
    n_excluded: int
    excluded_weight: float


def fit_form(m: ResponseMatrix, policy: MissingPolicy = "exclude", *,
             weighted: bool = True, diagnostics: bool = True) -> FormFit:
    items = fit_cml(m, policy, weighted=weighted)
    persons = estimate_person_params(items)
    fit = fit_statistics(m, items, persons, policy, weighted=weighted) if diagnostics else None
    raw = score(m, policy)
    if not weighted:
        raw = type(raw)(raw.scores, np.ones_like(raw.weights), raw.max_score, raw.included,
                        raw.excluded_weight, raw.policy)
    return FormFit(items, persons, fit, distribution(raw), raw.n_excluded, raw.excluded_weight)


# -- study 1: NEAT ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NeatResult:
    """Reference form X (data or fixed reference severities) vs. form Y."""

    x_items: ItemParams
    y: FormFit
    selection: AnchorSelection
    table: EquatingTable
    thresholds: tuple[float, ...]
    threshold_scores: np.ndarray
    linking: list[Correspondence]
    minimization: list[Correspondence]
    prevalences: list[PrevalenceResult]
    x_fit: FormFit | None = None
    see: BootstrapResult | None = None

    @property
    def link(self) -> LinkingTransform:
        return self.selection.link

    def threshold_see(self) -> np.ndarray | None:
        if self.see is None:
            return None
        return self.see.see[:len(self.thresholds)]


def _neat_core(x_items: ItemParams, y_items: ItemParams, y_persons: PersonParams,
               y_dist: ScoreDistribution, unique: Sequence[str], tol: float,
               thresholds: Sequence[float]):
    shared = [c for c in y_items.codes if c in x_items.codes]
    sel = select_anchor(x_items, y_items, shared, unique, tol)
    table = irt_true_score_equate(x_items, y_items, sel.link, "X", "Y")
    t_scores = np.array([true_score_at(sel.link.apply(t), y_items) for t in thresholds])
    to_x = sel.link.inverse()
    linking = linking_correspondence(y_persons, to_x, thresholds)
    adjusted = y_persons.adjusted(to_x.slope, to_x.intercept)
    prevs = [voh_prevalence(adjusted, y_dist, t) for t in thresholds]
    mins = [minimization_correspondence(pr, y_dist) for pr in prevs]
    return sel, table, t_scores, linking, mins, prevs


def neat_study(y_data: ResponseMatrix, *, x_data: ResponseMatrix | None = None,
               x_items: ItemParams | None = None, unique: Sequence[str] = (),
               tol: float = 0.5, thresholds: Sequence[float] = (-0.25, 1.83),
               policy: MissingPolicy = "exclude", bootstrap: BootstrapSpec | None = None,
               threads: int | None = None) -> NeatResult:
    """Anchor selection, linking, IRT true-score equating and correspondences.

    Form X is either fitted from ``x_data`` or given as fixed ``x_items``
    (a reference metric). Thresholds are abilities on X's metric.
    """
    if (x_data is None) == (x_items is None):
        raise ConfigError("supply exactly one of x_data or x_items")
    x_fit = fit_form(x_data, policy) if x_data is not None else None
    xi = x_fit.items if x_fit is not None else x_items
    y_fit = fit_form(y_data, policy)
    thresholds = tuple(float(t) for t in thresholds)
    sel, table, t_scores, linking, mins, prevs = _neat_core(
        xi, y_fit.items, y_fit.persons, y_fit.dist, unique, tol, thresholds)

    see = None
    if bootstrap is not None:
        data = [y_data] if x_data is None else [x_data, y_data]

        def pipeline(sample):
            if x_data is None:
                bx, my = xi, sample[0]
            else:
                bx, my = fit_cml(sample[0], policy), sample[1]
            by = fit_cml(my, policy)
            s = select_anchor(bx, by, [c for c in by.codes if c in bx.codes], unique, tol)
            tab = irt_true_score_equate(bx, by, s.link)
            ts = [true_score_at(s.link.apply(t), by) for t in thresholds]
            return np.concatenate([ts, tab.equated])

        see = bootstrap_see(pipeline, data, bootstrap, threads)
        table = table.with_see(see.see[len(thresholds):])
    return NeatResult(xi, y_fit, sel, table, thresholds, t_scores, linking, mins, prevs,
                      x_fit, see)


# -- study 2: single group ------------------------------------------------

@dataclass(frozen=True, eq=False)
class SingleGroupResult:
    adult_codes: tuple[str, ...]
    adult: FormFit
    children: FormFit
    selection: AnchorSelection
    tables: dict[str, EquatingTable]
    n_used: int
    see: BootstrapResult | None = None

    def equivalents(self, adult_scores: dict[str, int]) -> dict[str, dict[str, tuple]]:
        """``{method: {level: (value, see)}}`` for the given Adult-scale cuts."""
        out: dict[str, dict[str, tuple]] = {}
        for method, tab in self.tables.items():
            out[method] = {}
            for level, x in adult_scores.items():
                see = None if tab.see is None else float(tab.see[x])
                out[method][level] = (float(tab.equated[x]), see)
        return out


def derive_single_group(m: ResponseMatrix, scale: ScaleDefinition,
                        policy: MissingPolicy = "exclude"
                        ) -> tuple[ResponseMatrix, ResponseMatrix]:
    """Children-form data and the Adult form obtained by dropping children items."""
    if not scale.children_referenced:
        raise ConfigError(f"scale {scale.scale_id!r} marks no children-referenced items")
    adult_codes = [c for c in m.items if c in set(scale.household_items)]
    if len(adult_codes) < 2:
        raise ConfigError("fewer than 2 household-referenced items remain for the Adult form")
    _, _, included = complete_cases(m, policy)
    children = m.take_rows(np.flatnonzero(included))
    if policy == "as-denied":
        children = ResponseMatrix(children.items, np.nan_to_num(children.cells, nan=0.0),
                                  children.weights, children.scale_id)
    adult = restrict_to_items(children, adult_codes)
    return adult, children


def _sg_tables(adult: ResponseMatrix, children: ResponseMatrix, unique, tol,
               bA: ItemParams, bC: ItemParams, dA: ScoreDistribution,
               dC: ScoreDistribution):
    sel = select_anchor(bA, bC, list(adult.items), unique, tol)
    tables = {
        "irt-ts": irt_true_score_equate(bA, bC, sel.link, "adult", "children"),
        "mean": mean_equate(dA, dC, "adult", "children"),
        "linear": linear_equate(dA, dC, "adult", "children"),
        "equipercentile": equipercentile_equate(dA, dC, "adult", "children"),
    }
    return sel, tables


def single_group_study(m: ResponseMatrix, scale: ScaleDefinition, *,
                       unique: Sequence[str] = (), tol: float = 0.5,
                       policy: MissingPolicy = "exclude",
                       bootstrap: BootstrapSpec | None = None,
                       threads: int | None = None) -> SingleGroupResult:
    adult, children = derive_single_group(m, scale, policy)
    fa = fit_form(adult, "exclude")
    fc = fit_form(children, "exclude")
    sel, tables = _sg_tables(adult, children, unique, tol, fa.items, fc.items, fa.dist,
                             fc.dist)
    see = None
    if bootstrap is not None:
        J = adult.n_items + 1

        def pipeline(sample):
            ch = sample[0]
            ad = restrict_to_items(ch, adult.items)
            dA = distribution(score(ad))
            dC = distribution(score(ch))
            _, tabs = _sg_tables(ad, ch, unique, tol, fit_cml(ad), fit_cml(ch), dA, dC)
            return np.concatenate([tabs[k].equated for k in SG_METHODS])

        see = bootstrap_see(pipeline, [children], bootstrap, threads)
        tables = {k: tables[k].with_see(see.see[i * J:(i + 1) * J])
                  for i, k in enumerate(SG_METHODS)}
    return SingleGroupResult(tuple(adult.items), fa, fc, sel, tables,
                             children.n_respondents, see)


# -- prevalence -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PrevalenceStudy:
    form: FormFit
    link_to_reference: LinkingTransform
    selection: AnchorSelection | None
    results: list[PrevalenceResult]
    deterministic: bool = False
    notes: list[str] = field(default_factory=list)


def prevalence_study(m: ResponseMatrix, thresholds: Sequence[float], *,
                     reference: ItemParams | None = None, unique: Sequence[str] = (),
                     tol: float = 0.5, policy: MissingPolicy = "exclude",
                     deterministic: bool = False, zero_score: str = "pseudo"
                     ) -> PrevalenceStudy:
    form = fit_form(m, policy)
    notes = []
    selection = None
    if reference is not None:
        shared = [c for c in form.items.codes if c in reference.codes]
        selection = select_anchor(form.items, reference, shared, unique, tol)
        link = selection.link
    else:
        link = LinkingTransform.identity()
        notes.append("no reference metric supplied: thresholds applied on the form's "
                     "own mean-centred metric")
    persons = form.persons.adjusted(link.slope, link.intercept)
    if deterministic:
        persons = PersonParams(persons.theta, np.full_like(persons.se, 1e-6),
                               persons.target, persons.pseudo)
        notes.append("deterministic limit: measurement errors set to 1e-6")
    results = [voh_prevalence(persons, form.dist, t, zero_score) for t in thresholds]
    return PrevalenceStudy(form, link, selection, results, deterministic, notes)
