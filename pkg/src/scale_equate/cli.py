"""Command-line entry point: ``scale-equate <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classical import write_tables
from .errors import ConfigError, ScaleEquateError
from .ingest import (MISSING_POLICIES, ScaleDefinition, ItemDef, load_responses,
                     load_scale, write_responses, write_scale)
from .prevalence import DEFAULT_THRESHOLDS, load_global_standard, write_prevalence
from .reference import lower_thresholds, national_scale_name
from .report import TextReport, format_table, value_with_see, write_csv
from .resampling import BootstrapSpec
from .simulate import SimSpec, simulate_responses
from .studies import (SG_METHODS, fit_form, neat_study, prevalence_study,
                      single_group_study)

log = logging.getLogger("scale_equate")

METHOD_LABELS = {"irt-ts": "IRT-TS", "mean": "Mean", "linear": "Linear",
                 "equipercentile": "Equip"}


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _codes(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _require(path: str | None, flag: str) -> Path:
    if not path:
        raise ConfigError(f"{flag} is required")
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{flag}: file not found: {p}")
    return p


def _config(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _bootstrap(args) -> BootstrapSpec | None:
    return BootstrapSpec(args.bootstrap, args.seed) if args.bootstrap > 0 else None


# -- fit ------------------------------------------------------------------

def cmd_fit(args) -> int:
    scale_path = _require(args.scale, "--scale")
    data_path = _require(args.data, "--data")
    scale = load_scale(scale_path)
    m = load_responses(data_path, scale, args.missing)
    form = fit_form(m, args.missing, weighted=not args.unweighted)
    out = _outdir(args)
    b, f, p = form.items, form.fit, form.persons
    status = f.item_status()

    write_csv(out / "items.csv", ("code", "b", "se", "infit", "outfit", "status"),
              [(c, repr(float(b.severities[j])), repr(float(b.se[j])),
                repr(float(f.infit[j])), repr(float(f.outfit[j])), status[j])
               for j, c in enumerate(b.codes)])
    write_csv(out / "persons.csv", ("r", "theta", "se", "pseudo"),
              [(r, repr(float(p.theta[r])), repr(float(p.se[r])), int(p.pseudo[r]))
               for r in p.scores])
    write_csv(out / "residual_corr.csv", ("code",) + b.codes,
              [(c,) + tuple(repr(float(v)) for v in f.residual_corr[j])
               for j, c in enumerate(b.codes)])
    write_csv(out / "eigenvalues.csv", ("component", "eigenvalue"),
              [(k + 1, repr(float(v))) for k, v in enumerate(f.eigenvalues)])

    rep = TextReport(f"Rasch fit: {scale.scale_id}", _config(args), [scale_path, data_path])
    rep.add("Items", format_table(
        ["code", "b", "se", "infit", "outfit", "status"],
        [(c, f"{b.severities[j]:.3f}", f"{b.se[j]:.3f}", f"{f.infit[j]:.3f}",
          f"{f.outfit[j]:.3f}", status[j]) for j, c in enumerate(b.codes)]))
    rep.add("Person parameters by raw score", format_table(
        ["r", "theta", "se", "note"],
        [(r, f"{p.theta[r]:.3f}", f"{p.se[r]:.3f}", "pseudo-score" if p.pseudo[r] else "")
         for r in p.scores]))
    off = np.abs(f.residual_corr - np.eye(len(b.codes)))
    summary = [
        f"overall: {'PASS' if f.acceptable() else 'WARN'} "
        "(infit in (0.7, 1.3); |residual correlation| < 0.4)",
        f"max |residual correlation|: {off.max():.3f}",
        f"Rasch reliability: {f.reliability:.3f}  [{f.reliability_formula}]",
        "PCA eigenvalues of residual correlations: "
        + ", ".join(f"{v:.3f}" for v in f.eigenvalues),
        f"respondents used for fit statistics: {f.n_used}",
        f"missing-data policy: {args.missing}; excluded rows: {form.n_excluded}",
        f"sampling weights: {'ignored' if args.unweighted else 'used'}",
        f"CML iterations: {b.n_iter}; final max |gradient|: {b.grad_norm:.2e}",
    ]
    rep.add("Summary", "\n".join(summary))
    rep.write(out / "fit_report.txt")
    print(rep.render(), end="")
    return 0


# -- equate-neat ----------------------------------------------------------

def cmd_equate_neat(args) -> int:
    y_scale_path = _require(args.scale_y or args.scale, "--scale-y/--scale")
    y_path = _require(args.data_y, "--data-y")
    y_scale = load_scale(y_scale_path)
    my = load_responses(y_path, y_scale, args.missing)
    inputs = [y_scale_path, y_path]
    unique = set(args.unique or []) | set(y_scale.unique_a_priori)

    x_data = x_items = None
    if args.global_standard:
        gs_path = _require(args.global_standard, "--global-standard")
        gs = load_global_standard(gs_path)
        x_items = gs.item_params()
        x_name = "GlobalStandard"
        inputs.append(gs_path)
    else:
        x_scale_path = _require(args.scale_x or args.scale, "--scale-x/--scale")
        x_path = _require(args.data_x, "--data-x (or --global-standard)")
        x_scale = load_scale(x_scale_path)
        x_data = load_responses(x_path, x_scale, args.missing)
        unique |= set(x_scale.unique_a_priori)
        x_name = x_scale.scale_id
        inputs += [x_scale_path, x_path]

    thresholds = args.thresholds or list(DEFAULT_THRESHOLDS.values())
    res = neat_study(my, x_data=x_data, x_items=x_items, unique=sorted(unique),
                     tol=args.anchor_tol, thresholds=thresholds, policy=args.missing,
                     bootstrap=_bootstrap(args))
    out = _outdir(args)
    sel = res.selection
    t_see = res.threshold_see()

    table = res.table
    table = type(table)(table.method, x_name, y_scale.scale_id, table.equated, table.see,
                        table.target_max)
    write_tables([table], out / "equating.csv")
    write_csv(out / "anchors.csv", ("code", "status", "displacement", "removal_order"),
              [(c, "anchor", repr(float(d)), "") for c, d in
               zip(sel.anchors, sel.link.displacements)]
              + [(c, "removed", repr(d), k + 1) for k, (c, d) in enumerate(sel.removed)]
              + [(c, "unique-a-priori", "", "") for c in sel.excluded_a_priori])
    corr_rows = []
    for i, t in enumerate(res.thresholds):
        see = "" if t_see is None else repr(float(t_see[i]))
        corr_rows.append((repr(t), "irt-ts", repr(float(res.threshold_scores[i])), see,
                          int(round(res.threshold_scores[i])), ""))
        lk, mn = res.linking[i], res.minimization[i]
        corr_rows.append((repr(t), "linking", "", "", lk.score, int(lk.tie)))
        corr_rows.append((repr(t), "minimization", "", "", mn.score, int(mn.tie)))
    write_csv(out / "correspondence.csv",
              ("threshold", "method", "value", "see", "raw_score", "tie"), corr_rows)
    write_prevalence(res.prevalences, out / "prevalence.csv")

    rep = TextReport(f"NEAT equating: {x_name} -> {y_scale.scale_id}", _config(args), inputs)
    rep.add("Linking (Mean/Sigma)", "\n".join([
        f"slope A = {sel.link.slope:.6f}, intercept B = {sel.link.intercept:.6f} "
        f"({x_name} metric -> {y_scale.scale_id} metric)",
        f"tolerance: {sel.tolerance}; displacement metric: {sel.metric}",
        "unique a priori: " + (", ".join(sel.excluded_a_priori) or "none"),
        "removal order: " + (", ".join(f"{c} ({d:.3f})" for c, d in sel.removed) or "none"),
    ]))
    rep.add("Anchor items", format_table(
        ["code", "displacement"],
        [(c, f"{d:.3f}") for c, d in zip(sel.anchors, sel.link.displacements)]))

    name = national_scale_name(y_scale.scale_id)
    internal = {}
    if name is not None and len(res.thresholds) == 2:
        cuts = lower_thresholds(name, children=False)
        internal = {0: cuts["moderate"], 1: cuts["severe"]}
    for i, t in enumerate(res.thresholds):
        see = None if t_see is None else float(t_see[i])
        rep.add(f"Equated raw scores for threshold {t:g}", format_table(
            [("Food Insecurity", "Scales"), ("Internal", "Monitoring"),
             ("IRT-TS", "Rasch (SEE)"), ("Linking", ""), ("Min. Diff.", "")],
            [(y_scale.scale_id, internal.get(i, "-"),
              value_with_see(float(res.threshold_scores[i]), see),
              res.linking[i].score, res.minimization[i].score)]))
    rows = []
    clamped, mask = table.clamped()
    for x in table.scores:
        see = "" if table.see is None else f"{table.see[x]:.3f}"
        rows.append((x, f"{table.equated[x]:.3f}", see, int(round(clamped[x]))))
    rep.add(f"IRT true-score equating table ({x_name} -> {y_scale.scale_id})",
            format_table(["x", "equated", "SEE", "nearest"], rows)
            + "\nendpoints 0 and J map to 0 and J by convention")
    notes = [f"prevalence at {pr.threshold:g}: {pr.prevalence:.4f}" for pr in res.prevalences]
    if res.see is not None:
        notes.append(f"bootstrap: {res.see.n_requested} replications, "
                     f"{res.see.n_failed} failed, seed {args.seed}; "
                     f"resampled forms: {'Y' if x_data is None else 'X and Y'}")
    ties = [c.threshold for c in res.linking + res.minimization if c.tie]
    if ties:
        notes.append("ties broken toward the smaller raw score at thresholds "
                     + ", ".join(f"{t:g}" for t in ties))
    rep.add("Notes", "\n".join(notes))
    rep.write(out / "report.txt")
    print(rep.render(), end="")
    return 0


# -- equate-sg ------------------------------------------------------------

def cmd_equate_sg(args) -> int:
    scale_path = _require(args.scale, "--scale")
    data_path = _require(args.data, "--data")
    scale = load_scale(scale_path)
    if not scale.children_referenced:
        raise ConfigError(f"scale {scale.scale_id!r} marks no children-referenced items")
    m = load_responses(data_path, scale, args.missing)

    ref_name = args.reference_scale or national_scale_name(scale.scale_id)
    if args.thresholds:
        if len(args.thresholds) != 2 or any(t != int(t) for t in args.thresholds):
            raise ConfigError("--thresholds for equate-sg takes two integer Adult raw "
                              "scores: moderate,severe")
        cuts = {"moderate": int(args.thresholds[0]), "severe": int(args.thresholds[1])}
        current = None
    elif ref_name is not None:
        cuts = lower_thresholds(ref_name, children=False)
        current = lower_thresholds(ref_name, children=True)
    else:
        raise ConfigError("no built-in thresholds for this scale; pass --thresholds "
                          "or --reference-scale")
    unique = sorted(set(args.unique or []) | set(scale.unique_a_priori))
    res = single_group_study(m, scale, unique=unique, tol=args.anchor_tol,
                             policy=args.missing, bootstrap=_bootstrap(args))
    n_adult = len(res.adult_codes)
    for level, x in cuts.items():
        if not 0 <= x <= n_adult:
            raise ConfigError(f"{level} threshold {x} outside the Adult range 0..{n_adult}")
    out = _outdir(args)
    write_tables([res.tables[k] for k in SG_METHODS], out / "equating.csv")
    eq = res.equivalents(cuts)
    write_csv(out / "equivalents.csv",
              ("method", "level", "adult_score", "children_equivalent", "see", "nearest"),
              [(k, level, cuts[level], repr(v), "" if s is None else repr(s),
                int(round(min(max(v, 0), len(scale.codes)))))
               for k in SG_METHODS for level, (v, s) in eq[k].items()])

    rep = TextReport(f"Single-group equating: Adult -> Children ({scale.scale_id})",
                     _config(args), [scale_path, data_path])
    rep.add("Forms", "\n".join([
        f"Adult form: {n_adult} household-referenced items ({', '.join(res.adult_codes)})",
        f"Children form: {len(scale.codes)} items",
        f"respondents: {res.n_used} (missing-data policy: {args.missing})",
        f"Adult thresholds: moderate {cuts['moderate']}, severe {cuts['severe']}"
        + (f" [{ref_name}, households without children]" if current else " [user]"),
    ]))
    rep.add("Equated raw scores on the Children scale", format_table(
        [("Equating", "Method"), ("Moderate", "(SEE)"), ("Severe", "(SEE)")],
        [(METHOD_LABELS[k], value_with_see(*eq[k]["moderate"]),
          value_with_see(*eq[k]["severe"])) for k in SG_METHODS]))
    if current:
        rep.add("Current Children-scale thresholds",
                f"moderate {current['moderate']}, severe {current['severe']} "
                f"[{ref_name}, households with children]")
    rep.add("Requirement diagnostics", "\n".join([
        f"Rasch reliability: Adult {res.adult.fit.reliability:.3f}, "
        f"Children {res.children.fit.reliability:.3f} "
        f"(difference {abs(res.adult.fit.reliability - res.children.fit.reliability):.3f})",
        f"IRT-TS link Adult -> Children: A = {res.selection.link.slope:.4f}, "
        f"B = {res.selection.link.intercept:.4f}; anchors removed: "
        + (", ".join(c for c, _ in res.selection.removed) or "none"),
    ]))
    rows = []
    for x in range(n_adult + 1):
        row = [x]
        for k in SG_METHODS:
            t = res.tables[k]
            row.append(value_with_see(t.equated[x], None if t.see is None else t.see[x]))
        rows.append(row)
    rep.add("Full equating tables", format_table(
        ["Adult x"] + [METHOD_LABELS[k] for k in SG_METHODS], rows))
    if res.see is not None:
        rep.add("Bootstrap", f"{res.see.n_requested} replications, {res.see.n_failed} "
                f"failed, seed {args.seed}")
    rep.write(out / "report.txt")
    print(rep.render(), end="")
    return 0


# -- prevalence -----------------------------------------------------------

def cmd_prevalence(args) -> int:
    scale_path = _require(args.scale, "--scale")
    data_path = _require(args.data, "--data")
    scale = load_scale(scale_path)
    m = load_responses(data_path, scale, args.missing)
    inputs = [scale_path, data_path]
    reference = None
    if args.link and not args.global_standard:
        raise ConfigError("--link requires --global-standard")
    if args.global_standard:
        gs_path = _require(args.global_standard, "--global-standard")
        reference = load_global_standard(gs_path).item_params()
        inputs.append(gs_path)
    thresholds = list(DEFAULT_THRESHOLDS.values())
    for t in args.thresholds or []:
        if t not in thresholds:
            thresholds.append(t)
    unique = sorted(set(args.unique or []) | set(scale.unique_a_priori))
    study = prevalence_study(m, thresholds, reference=reference, unique=unique,
                             tol=args.anchor_tol, policy=args.missing,
                             deterministic=args.deterministic, zero_score=args.zero_score)
    out = _outdir(args)
    write_prevalence(study.results, out / "prevalence.csv")
    rep = TextReport(f"Prevalence: {scale.scale_id}", _config(args), inputs)
    rep.add("Prevalence beyond thresholds", format_table(
        ["threshold", "prevalence"],
        [(f"{r.threshold:g}", f"{r.prevalence:.4f}") for r in study.results]))
    first = study.results[0]
    rep.add("Per raw score", format_table(
        ["r", "share", "theta", "se"] + [f"tail>{r.threshold:g}" for r in study.results],
        [(r, f"{first.shares[r]:.4f}", f"{first.theta[r]:.3f}", f"{first.se[r]:.3f}")
         + tuple(f"{res.tail[r]:.4f}" for res in study.results) for r in first.scores]))
    link = study.link_to_reference
    notes = [f"link to reference metric: A = {link.slope:.4f}, B = {link.intercept:.4f}",
             f"raw score 0 policy: {args.zero_score}; extreme scores use pseudo-scores "
             "0.5 and J-0.5"] + study.notes
    if study.selection is not None:
        notes.append("anchors: " + ", ".join(study.selection.anchors))
    rep.add("Notes", "\n".join(notes))
    rep.write(out / "report.txt")
    print(rep.render(), end="")
    return 0


# -- simulate -------------------------------------------------------------

def cmd_simulate(args) -> int:
    codes = None
    if args.scale:
        codes = load_scale(_require(args.scale, "--scale")).codes
    if args.severities is None:
        raise ConfigError("--severities is required")
    spec = SimSpec(args.severities, args.n, args.theta_mean, args.theta_sd, seed=args.seed,
                   codes=codes, weight_sigma=args.weight_sigma,
                   scale_id=args.scale_id)
    m = simulate_responses(spec)
    out = _outdir(args)
    write_responses(m, out / "responses.csv")
    if args.scale is None:
        write_scale(ScaleDefinition(spec.scale_id, tuple(ItemDef(c) for c in m.items)),
                    out / "scale.yaml")
    print(f"wrote {m.n_respondents} respondents x {m.n_items} items to "
          f"{out / 'responses.csv'}")
    return 0


# -- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scale-equate",
        description="Rasch fitting and equating of experience-based scales.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        p.add_argument("--scale", help="scale definition (YAML)")
        if data:
            p.add_argument("--data", help="response file (CSV)")
        p.add_argument("--missing", choices=MISSING_POLICIES, default="exclude",
                       help="missing-data policy (default: exclude)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True, help="output directory")

    def equating(p):
        p.add_argument("--anchor-tol", type=float, default=0.5)
        p.add_argument("--unique", type=_codes, help="comma-separated unique-a-priori items")
        p.add_argument("--thresholds", type=_floats,
                       help="comma-separated thresholds; use --thresholds=-0.25,1.83 "
                            "for negative values")
        p.add_argument("--bootstrap", type=int, default=1000,
                       help="bootstrap replications for SEE (0 disables)")

    p = sub.add_parser("fit", help="fit the Rasch model and report item fit")
    common(p)
    p.add_argument("--unweighted", action="store_true", help="ignore sampling weights")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("equate-neat", help="study 1: reference form vs. national form")
    common(p, data=False)
    equating(p)
    p.add_argument("--data-x", help="responses for reference form X")
    p.add_argument("--data-y", help="responses for form Y")
    p.add_argument("--scale-x")
    p.add_argument("--scale-y")
    p.add_argument("--global-standard", help="fixed reference severities used as form X")
    p.set_defaults(func=cmd_equate_neat)

    p = sub.add_parser("equate-sg", help="study 2: Adult vs. Children form, single group")
    common(p)
    equating(p)
    p.add_argument("--reference-scale", help="built-in threshold table (ELCSA, EMSA, EBIA)")
    p.set_defaults(func=cmd_equate_sg)

    p = sub.add_parser("prevalence", help="probabilistic prevalence beyond thresholds")
    common(p)
    p.add_argument("--global-standard")
    p.add_argument("--link", action="store_true",
                   help="require linking to the Global Standard metric")
    p.add_argument("--anchor-tol", type=float, default=0.5)
    p.add_argument("--unique", type=_codes)
    p.add_argument("--thresholds", type=_floats,
                   help="extra thresholds added to -0.25 and 1.83")
    p.add_argument("--deterministic", action="store_true",
                   help="shrink measurement errors to 1e-6")
    p.add_argument("--zero-score", choices=("pseudo", "secure"), default="pseudo")
    p.set_defaults(func=cmd_prevalence)

    p = sub.add_parser("simulate", help="write Rasch-conforming synthetic responses")
    common(p, data=False)
    p.add_argument("--severities", type=_floats)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--theta-mean", type=float, default=0.0)
    p.add_argument("--theta-sd", type=float, default=1.0)
    p.add_argument("--weight-sigma", type=float, default=0.0)
    p.add_argument("--scale-id", default="SIM")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScaleEquateError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
