"""Report persistence and presentation: JSON, summary tables, radar charts.

JSON output is fully sorted and uses Python's shortest-roundtrip float
representation, so identical experiments serialize to identical bytes.
The CSV table mirrors the classifier x metric layout used for model
comparison: one row per report with ``mean (std)`` cells.
"""

import csv
import json
import math
from pathlib import Path

from .classifiers import ModelSpec
from .evaluation import (
    BINARY_AREA_ORDER,
    METRIC_NAMES,
    UNARY_AREA_ORDER,
    Confusion,
    EvalReport,
    MetricSet,
    UserResult,
)

TABLE_COLUMNS = ["classifier", "FC", "ACC", "RMSE", "GRR", "GAR", "F1", "AUC_ROC", "Area"]


def report_to_dict(report: EvalReport) -> dict:
    agg = report.aggregate()
    return {
        "modality": report.modality,
        "scheme": report.scheme,
        "spec": {
            "algorithm": report.spec.algorithm,
            "hyperparameters": report.spec.hyperparameters,
            "seed": report.spec.seed,
        },
        "selection_method": report.selection_method,
        "feature_count": report.feature_count,
        "effective_feature_count": report.effective_feature_count,
        "split": report.split,
        "per_user": {
            sid: {
                "metrics": res.metrics.as_dict(),
                "confusion": {
                    "tp": res.confusion.tp,
                    "fn": res.confusion.fn,
                    "fp": res.confusion.fp,
                    "tn": res.confusion.tn,
                },
                "n_train_valid": res.n_train_valid,
                "n_train_imposter": res.n_train_imposter,
                "n_test_valid": res.n_test_valid,
                "n_test_imposter": res.n_test_imposter,
            }
            for sid, res in sorted(report.per_user.items())
        },
        "skipped": dict(sorted(report.skipped.items())),
        "notes": list(report.notes),
        "aggregate": agg,
        "area_of_means": report.area_of_means(),
    }


def save_report_json(report: EvalReport, path) -> None:
    Path(path).write_text(json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n")


def _mean_std_cell(agg: dict, name: str) -> str:
    entry = agg[name]
    if entry["mean"] is None:
        return "N/A"
    return f"{entry['mean']:.2f} ({entry['std']:.2f})"


def table_rows(reports: list[EvalReport]) -> list[list[str]]:
    """Comparison table rows (header included) for a set of reports."""
    rows = [list(TABLE_COLUMNS)]
    for report in reports:
        agg = report.aggregate()
        area_mean = agg["area"]["mean"]
        rows.append(
            [
                f"{report.spec.describe()} [{report.scheme}]",
                str(report.feature_count),
                _mean_std_cell(agg, "acc"),
                _mean_std_cell(agg, "rmse"),
                _mean_std_cell(agg, "grr"),
                _mean_std_cell(agg, "gar"),
                _mean_std_cell(agg, "f1"),
                _mean_std_cell(agg, "auc_roc") if report.scheme == "binary" else "N/A",
                f"{area_mean:.2f}" if area_mean is not None else "N/A",
            ]
        )
    return rows


def save_table_csv(reports: list[EvalReport], path) -> None:
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(table_rows(reports))


def save_relative_loss_csv(loss_rows: list[dict], path, metric_names=("grr", "gar", "area")) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["classifier", "scheme"] + [name.upper() for name in metric_names])
        for row in loss_rows:
            cells = [row["classifier"], row["scheme"]]
            for name in metric_names:
                value = row[name]["value"]
                loss = row[name]["loss_pct"]
                cells.append("N/A" if value is None else f"{value:.2f} ({loss:.2f}%)")
            writer.writerow(cells)


def save_sweep_csv(sweep: dict[int, EvalReport], path) -> None:
    """Accuracy (and area) against feature count, for the sweep plot."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature_count", "effective_feature_count", "mean_acc", "mean_area"])
        for count in sorted(sweep):
            agg = sweep[count].aggregate()
            writer.writerow(
                [
                    count,
                    sweep[count].effective_feature_count,
                    f"{agg['acc']['mean']:.4f}" if agg["acc"]["mean"] is not None else "N/A",
                    f"{agg['area']['mean']:.4f}" if agg["area"]["mean"] is not None else "N/A",
                ]
            )


def radar_axes(report: EvalReport) -> tuple[list[str], list[float]]:
    order = UNARY_AREA_ORDER if report.spec.is_unary else BINARY_AREA_ORDER
    agg = report.aggregate()
    labels = [name.upper().replace("_", "-") for name in order]
    values = [agg[name]["mean"] if agg[name]["mean"] is not None else 0.0 for name in order]
    return labels, values


def save_radar_svg(reports: list[EvalReport], path, title: str = "") -> None:
    """Spider plot of aggregate metric means, one polygon per report."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(subplot_kw={"projection": "polar"}, figsize=(6, 6))
    for report in reports:
        labels, values = radar_axes(report)
        angles = [2.0 * math.pi * i / len(values) for i in range(len(values))]
        ax.plot(angles + angles[:1], values + values[:1], label=report.spec.describe())
        ax.fill(angles + angles[:1], values + values[:1], alpha=0.1)
    labels, _ = radar_axes(reports[0])
    angles = [2.0 * math.pi * i / len(labels) for i in range(len(labels))]
    ax.set_xticks(angles)
    ax.set_xticklabels(labels)
    ax.set_ylim(0.0, 1.0)
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", bbox_to_anchor=(1.3, 1.1), fontsize=8)
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)


def report_from_dict(payload: dict) -> EvalReport:
    spec = ModelSpec(
        payload["spec"]["algorithm"],
        dict(payload["spec"]["hyperparameters"]),
        int(payload["spec"]["seed"]),
    )
    report = EvalReport(
        modality=payload["modality"],
        scheme=payload["scheme"],
        spec=spec,
        selection_method=payload["selection_method"],
        feature_count=int(payload["feature_count"]),
        effective_feature_count=int(payload["effective_feature_count"]),
        split=float(payload["split"]),
        skipped=dict(payload.get("skipped", {})),
        notes=list(payload.get("notes", [])),
    )
    for sid, entry in payload["per_user"].items():
        metrics = MetricSet(**{name: entry["metrics"].get(name) for name in METRIC_NAMES})
        c = entry["confusion"]
        report.per_user[sid] = UserResult(
            subject_id=sid,
            metrics=metrics,
            confusion=Confusion(c["tp"], c["fn"], c["fp"], c["tn"]),
            n_train_valid=int(entry["n_train_valid"]),
            n_train_imposter=int(entry["n_train_imposter"]),
            n_test_valid=int(entry["n_test_valid"]),
            n_test_imposter=int(entry["n_test_imposter"]),
        )
    return report


def load_report_json(path) -> EvalReport:
    return report_from_dict(json.loads(Path(path).read_text()))
