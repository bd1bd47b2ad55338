"""Subcommand front end binding the pipeline stages through files on disk.

Every stage reads the previous stage's artifact and writes its own under
``<out>/{data,features,models,reports}/``, prints a one-line summary, and
exits 0 on success. Failures print a machine-readable JSON error to stderr
with a distinct exit code: 2 missing input, 3 malformed input, 4 not enough
data for the protocol, 1 anything else. ``--seed`` threads through every
stochastic stage, so rerunning a command with the same configuration
reproduces its outputs byte for byte.
"""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import classifiers, evaluation, ingest, reporting, selection, stats, synth, windowing
from .errors import InsufficientDataError, OxiAuthError, ParseError, ValidationError
from .features import MODALITIES, build_matrix, load_matrix_csv, save_matrix_csv

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_MISSING_INPUT = 2
EXIT_MALFORMED = 3
EXIT_INSUFFICIENT = 4

DEFAULT_HYPERPARAMETERS = {
    "rf": {"n_estimators": 50},
    "knn": {"k": 5, "minkowski_p": 2},
    "nb": {},
    "svm_rbf": {"gamma": 0.05, "C": 5},
    "svm_poly": {"degree": 3, "C": 12},
    "ocsvm_rbf": {"gamma": 0.05, "nu": 0.5},
    "ocsvm_poly": {"degree": 1, "nu": 0.5},
}


def _out_dirs(out_root) -> dict[str, Path]:
    root = Path(out_root)
    dirs = {name: root / name for name in ("data", "features", "models", "reports")}
    for d in dirs.values():
        d.mkdir(parents=True, exist_ok=True)
    return dirs


def _default_k(modality: str) -> int:
    return 31 if modality == "HR_SPO2" else 21


def resolve_spec(model: str, scheme: str, params: dict | None, seed: int) -> classifiers.ModelSpec:
    """A preset name, or an algorithm name with optional explicit params."""
    if model in classifiers.PRESETS:
        preset = classifiers.PRESETS[model]
        hp = dict(preset.hyperparameters)
        if params:
            hp.update(params)
        return classifiers.ModelSpec(preset.algorithm, hp, seed=seed)
    if model in classifiers.ALGORITHMS:
        hp = dict(DEFAULT_HYPERPARAMETERS[model])
        if params:
            hp.update(params)
        return classifiers.ModelSpec(model, hp, seed=seed)
    raise ValidationError(f"unknown model {model!r}; use an algorithm name or one of {sorted(classifiers.PRESETS)}")


def _scheme_for(spec: classifiers.ModelSpec) -> str:
    return "unary" if spec.is_unary else "binary"


def _load_windows(data_dir, gap_tolerance, spo2_bounds, hr_bounds):
    records, series = ingest.load_cohort(data_dir, spo2_bounds, hr_bounds)
    windows = []
    zoned = {}
    for rec in records:
        max_hr = ingest.max_heart_rate(rec)
        s = series[rec.subject_id]
        zoned[rec.subject_id] = windowing.zone_series(s, max_hr)
        windows.extend(windowing.segment(s, max_hr, gap_tolerance))
    return records, zoned, windows


def _bounds(args):
    return (args.spo2_min, args.spo2_max), (args.hr_min, args.hr_max)


def cmd_synth(args) -> int:
    dirs = _out_dirs(args.out)
    if args.preset == "separable":
        spec = synth.separable_preset(args.subjects, args.seed, duration_s=args.duration)
        if args.dropout is not None:
            spec = replace(spec, dropout_rate=args.dropout)
    else:
        spec = synth.CohortSpec(
            n_subjects=args.subjects,
            duration_s=args.duration,
            seed=args.seed,
            activity_profile=args.activity,
            dropout_rate=args.dropout if args.dropout is not None else 0.0,
        )
    paths = synth.generate_cohort(spec, dirs["data"])
    print(f"synth: wrote {len(paths) - 1} subject files + manifest under {dirs['data']}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    spo2_bounds, hr_bounds = _bounds(args)
    records, series = ingest.load_cohort(args.data, spo2_bounds, hr_bounds)
    dirs = _out_dirs(args.out)
    clean_dir = dirs["data"] / "clean"
    clean_dir.mkdir(exist_ok=True)
    total = 0
    for rec in records:
        s = series[rec.subject_id]
        ingest.write_subject_csv(clean_dir / f"{rec.subject_id}.csv", s.samples)
        total += len(s)
    ingest.save_manifest(records, clean_dir / "manifest.json")
    if args.dump_windows:
        windows = []
        for rec in records:
            windows.extend(windowing.segment(series[rec.subject_id], ingest.max_heart_rate(rec), args.gap_tolerance))
        windowing.dump_windows_csv(windows, dirs["data"] / "windows.csv")
    print(f"ingest: {len(records)} subjects, {total} valid samples -> {clean_dir}")
    return EXIT_OK


def cmd_features(args) -> int:
    spo2_bounds, hr_bounds = _bounds(args)
    records, _, windows = _load_windows(args.data, args.gap_tolerance, spo2_bounds, hr_bounds)
    dirs = _out_dirs(args.out)
    modalities = list(MODALITIES) if args.modality == "all" else [args.modality]
    for modality in modalities:
        matrix = build_matrix(windows, modality)
        save_matrix_csv(matrix, dirs["features"] / f"features_{modality.lower()}.csv")
    print(
        f"features: {len(windows)} windows from {len(records)} subjects -> "
        f"{', '.join('features_' + m.lower() + '.csv' for m in modalities)}"
    )
    return EXIT_OK


def cmd_ttest(args) -> int:
    spo2_bounds, hr_bounds = _bounds(args)
    _, zoned, _ = _load_windows(args.data, args.gap_tolerance, spo2_bounds, hr_bounds)
    dirs = _out_dirs(args.out)
    modes = ["one_vs_rest", "pairwise"] if args.mode == "both" else [args.mode]
    overall = {}
    for mode in modes:
        summary = stats.rejection_summary(zoned, mode, args.alpha)
        (dirs["reports"] / f"ttest_{mode}.json").write_text(stats.summary_to_json(summary) + "\n")
        import csv as _csv

        with open(dirs["reports"] / f"ttest_{mode}.csv", "w", newline="") as fh:
            _csv.writer(fh).writerows(stats.summary_to_csv_rows(summary))
        overall[mode] = summary.overall
    print("ttest: " + ", ".join(f"{m} rejection {overall[m]:.1%}" for m in modes))
    return EXIT_OK


def _cohort_from_features(path, modality):
    matrix = load_matrix_csv(path, modality)
    cohort = {}
    for sid in sorted(set(matrix.subject_ids)):
        rows = [i for i, s in enumerate(matrix.subject_ids) if s == sid]
        cohort[sid] = matrix.take(rows)
    return cohort


def _features_path(args):
    if args.features:
        return Path(args.features)
    return Path(args.out) / "features" / f"features_{args.modality.lower()}.csv"


def cmd_train(args) -> int:
    spec = resolve_spec(args.model, args.scheme, json.loads(args.params) if args.params else None, args.seed)
    scheme = _scheme_for(spec)
    method = args.selection or ("low_variance" if scheme == "unary" else "pca")
    k = args.k or _default_k(args.modality)
    cohort = _cohort_from_features(_features_path(args), args.modality)
    if args.user not in cohort:
        raise ValidationError(f"subject {args.user!r} not present in the feature matrix")
    subjects = sorted(cohort)
    valid_m = cohort[args.user]
    n_train = int(args.split * valid_m.n_rows)
    if n_train < 1:
        raise InsufficientDataError(f"subject {args.user!r} has too few windows to train")
    train_valid = valid_m.take(range(n_train)).with_labels(args.user)
    if scheme == "binary":
        import math as _math

        quota = _math.ceil(valid_m.n_rows / max(1, len(subjects) - 1))
        parts = [train_valid]
        for other in subjects:
            if other == args.user:
                continue
            rows = min(quota, cohort[other].n_rows)
            n_train_o = int(args.split * rows)
            if n_train_o:
                parts.append(cohort[other].take(range(n_train_o)).with_labels(args.user))
        from .features import concat_matrices

        fit_basis = concat_matrices(parts)
    else:
        fit_basis = train_valid
    transforms = selection.fit_two_level(fit_basis, method, k, args.correlation_threshold)
    model = classifiers.train(spec, fit_basis, transforms, valid_user=args.user)
    dirs = _out_dirs(args.out)
    out_path = dirs["models"] / f"{args.user}_{args.modality.lower()}_{spec.algorithm}.json"
    classifiers.save_model(model, out_path)
    print(f"train: {spec.describe()} for {args.user} ({fit_basis.n_rows} rows) -> {out_path}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    spec = resolve_spec(args.model, args.scheme, json.loads(args.params) if args.params else None, args.seed)
    scheme = _scheme_for(spec)
    method = args.selection or ("low_variance" if scheme == "unary" else "pca")
    k = args.k or _default_k(args.modality)
    cohort = _cohort_from_features(_features_path(args), args.modality)
    report = evaluation.run_experiment(
        cohort, spec, scheme, method, k, args.split, args.correlation_threshold
    )
    dirs = _out_dirs(args.out)
    name = f"report_{args.modality.lower()}_{scheme}_{spec.algorithm}"
    reporting.save_report_json(report, dirs["reports"] / f"{name}.json")
    reporting.save_table_csv([report], dirs["reports"] / f"{name}.csv")
    agg = report.aggregate()
    print(
        f"evaluate: {spec.describe()} {args.modality} {scheme}: "
        f"ACC {agg['acc']['mean']:.3f}, Area {agg['area']['mean']:.3f} "
        f"({len(report.per_user)} users, {len(report.skipped)} skipped) -> {name}.json"
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = resolve_spec(args.model, args.scheme, json.loads(args.params) if args.params else None, args.seed)
    scheme = _scheme_for(spec)
    method = args.selection or ("low_variance" if scheme == "unary" else "pca")
    counts = [int(c) for c in args.counts.split(",")]
    cohort = _cohort_from_features(_features_path(args), args.modality)
    sweep = evaluation.feature_count_sweep(cohort, spec, scheme, method, counts, args.split)
    dirs = _out_dirs(args.out)
    base = dirs["reports"] / f"sweep_{args.modality.lower()}_{scheme}_{spec.algorithm}"
    reporting.save_sweep_csv(sweep, base.with_suffix(".csv"))
    payload = {str(c): reporting.report_to_dict(r) for c, r in sweep.items()}
    base.with_suffix(".json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    best = max(sweep, key=lambda c: sweep[c].aggregate()["acc"]["mean"])
    print(f"sweep: counts {counts}, best ACC at {best} features -> {base.name}.csv")
    return EXIT_OK


def cmd_report(args) -> int:
    paths = [Path(p) for p in args.reports.split(",")]
    reports = [reporting.load_report_json(p) for p in paths]
    dirs = _out_dirs(args.out)
    reporting.save_table_csv(reports, dirs["reports"] / "summary_table.csv")
    wrote = ["summary_table.csv"]
    if len(reports) >= 2:
        loss = evaluation.relative_loss(reports)
        reporting.save_relative_loss_csv(loss, dirs["reports"] / "relative_loss.csv")
        wrote.append("relative_loss.csv")
    if args.radar:
        reporting.save_radar_svg(reports, dirs["reports"] / "radar.svg")
        wrote.append("radar.svg")
    print(f"report: {len(reports)} report(s) -> {', '.join(wrote)}")
    return EXIT_OK


def _add_common(p):
    p.add_argument("--out", default="out", help="output root (stage artifacts go to subdirectories)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="JSON file whose keys override the flags")


def _add_bounds(p):
    p.add_argument("--spo2-min", type=float, default=ingest.SPO2_BOUNDS[0])
    p.add_argument("--spo2-max", type=float, default=ingest.SPO2_BOUNDS[1])
    p.add_argument("--hr-min", type=float, default=ingest.HR_BOUNDS[0])
    p.add_argument("--hr-max", type=float, default=ingest.HR_BOUNDS[1])
    p.add_argument("--gap-tolerance", type=float, default=windowing.GAP_TOLERANCE_S)


def _add_model(p):
    p.add_argument("--model", default="rf", help="algorithm or preset name")
    p.add_argument("--params", help="JSON object of hyperparameter overrides")
    p.add_argument("--scheme", choices=["binary", "unary"], default="binary",
                   help="only consulted when --model is ambiguous")
    p.add_argument("--selection", choices=["pca", "select_k_best", "low_variance"])
    p.add_argument("--k", type=int, help="feature count (default 21, 31 for HR_SPO2)")
    p.add_argument("--split", type=float, default=evaluation.DEFAULT_SPLIT)
    p.add_argument("--correlation-threshold", type=float, default=selection.CORRELATION_THRESHOLD)
    p.add_argument("--features", help="feature CSV (default: <out>/features/features_<modality>.csv)")
    p.add_argument("--modality", choices=list(MODALITIES), default="HR_SPO2")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oxiauth", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic cohort")
    p.add_argument("--preset", choices=["separable", "default"], default="default")
    p.add_argument("--subjects", type=int, default=25)
    p.add_argument("--duration", type=float, default=1800.0, help="seconds per subject")
    p.add_argument("--activity", choices=list(synth.ACTIVITY_PROFILES), default="mixed")
    p.add_argument("--dropout", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="parse + clean raw subject files")
    p.add_argument("--data", required=True, help="directory with manifest.json and <subject>.csv files")
    p.add_argument("--dump-windows", action="store_true")
    _add_bounds(p)
    _add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("features", help="segment windows and extract feature matrices")
    p.add_argument("--data", required=True)
    p.add_argument("--modality", choices=list(MODALITIES) + ["all"], default="all")
    _add_bounds(p)
    _add_common(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("ttest", help="zone-wise SpO2 distinguishability analysis")
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=["one_vs_rest", "pairwise", "both"], default="both")
    p.add_argument("--alpha", type=float, default=stats.DEFAULT_ALPHA)
    _add_bounds(p)
    _add_common(p)
    p.set_defaults(func=cmd_ttest)

    p = sub.add_parser("train", help="train one model for one enrolled subject")
    p.add_argument("--user", required=True)
    _add_model(p)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="one-valid-user experiment over the whole cohort")
    _add_model(p)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="repeat the experiment across feature counts")
    p.add_argument("--counts", default="11,21,31,41")
    _add_model(p)
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="tables, relative-loss summary and radar charts")
    p.add_argument("--reports", required=True, help="comma-separated report JSON paths")
    p.add_argument("--radar", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_report)
    return parser


def _apply_config(args) -> None:
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ParseError("config not found", path)
        try:
            overrides = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON config: {e}", path) from None
        for key, value in overrides.items():
            setattr(args, key.replace("-", "_"), value)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return args.func(args)
    except OxiAuthError as e:
        if isinstance(e, ParseError) and ("not found" in str(e)):
            code = EXIT_MISSING_INPUT
        elif isinstance(e, (ParseError, ValidationError)):
            code = EXIT_MALFORMED
        elif isinstance(e, InsufficientDataError):
            code = EXIT_INSUFFICIENT
        else:
            code = EXIT_OTHER
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return code
    except FileNotFoundError as e:
        print(json.dumps({"error": "FileNotFoundError", "message": str(e)}), file=sys.stderr)
        return EXIT_MISSING_INPUT
    except (ValueError, json.JSONDecodeError) as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
