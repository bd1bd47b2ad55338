"""One-valid-user experiment protocol and the multi-metric evaluation suite.

Metrics over a confusion matrix (valid = positive class): ACC, RMSE (root of
the misclassification rate, so ACC + RMSE^2 = 1), GRR = 1 - FAR, GAR =
1 - FRR, F1, rank-based AUC-ROC, and the normalized radar-polygon "area"
score over (ACC, GRR, GAR, F1, AUC-ROC) for binary models or the square
(ACC, GRR, GAR, F1) for unary models. Per-user metrics are aggregated as
mean (sample std) across valid users; undefined metrics are excluded from
aggregation and counted.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .classifiers import ModelSpec, TrainedModel, predict, score, train
from .errors import InsufficientDataError
from .features import LABEL_IMPOSTER, LABEL_VALID, FeatureMatrix, concat_matrices
from .selection import CORRELATION_THRESHOLD, fit_two_level

BINARY_AREA_ORDER = ("acc", "grr", "gar", "f1", "auc_roc")
UNARY_AREA_ORDER = ("acc", "grr", "gar", "f1")

DEFAULT_SPLIT = 0.9

METRIC_NAMES = ("acc", "rmse", "grr", "gar", "f1", "auc_roc", "area")


@dataclass(frozen=True)
class Confusion:
    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fn, self.fp, self.tn) < 0 or self.total == 0:
            raise ValueError("confusion counts must be non-negative and total >= 1")

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


@dataclass
class MetricSet:
    """Metric values; None marks a metric whose denominator was empty."""

    acc: float | None = None
    rmse: float | None = None
    grr: float | None = None
    gar: float | None = None
    f1: float | None = None
    auc_roc: float | None = None
    area: float | None = None

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def confusion_from_labels(actual, predicted) -> Confusion:
    tp = fn = fp = tn = 0
    for a, p in zip(actual, predicted):
        if a == LABEL_VALID:
            if p == LABEL_VALID:
                tp += 1
            else:
                fn += 1
        else:
            if p == LABEL_VALID:
                fp += 1
            else:
                tn += 1
    return Confusion(tp, fn, fp, tn)


def metrics_from_confusion(c: Confusion) -> MetricSet:
    """ACC/RMSE/GRR/GAR/F1 from one confusion; empty denominators give None."""
    total = c.total
    m = MetricSet()
    m.acc = (c.tp + c.tn) / total
    m.rmse = math.sqrt((c.fp + c.fn) / total)
    m.grr = c.tn / (c.fp + c.tn) if (c.fp + c.tn) > 0 else None
    m.gar = c.tp / (c.tp + c.fn) if (c.tp + c.fn) > 0 else None
    if c.tp == 0:
        # defined-zero rule: no true positives means no precision/recall mass
        m.f1 = 0.0 if (c.tp + c.fn) > 0 or (c.tp + c.fp) > 0 else None
    else:
        precision = c.tp / (c.tp + c.fp)
        recall = c.tp / (c.tp + c.fn)
        m.f1 = 2.0 / (1.0 / precision + 1.0 / recall)
    return m


def auc_roc(scores, labels) -> float:
    """P(random valid outscores random imposter), ties counted half.

    Equivalent to trapezoidal integration of the ROC curve.
    """
    scores = np.asarray(scores, dtype=float)
    labels = list(labels)
    pos = scores[[lb == LABEL_VALID for lb in labels]]
    neg = scores[[lb == LABEL_IMPOSTER for lb in labels]]
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("auc_roc needs both labels present")
    wins = 0.0
    for b in neg:
        wins += float(np.sum(pos > b)) + 0.5 * float(np.sum(pos == b))
    return wins / (len(pos) * len(neg))


def area(metrics) -> float:
    """Normalized radar-polygon area of k metrics at equal 2*pi/k angles.

    With unit axes the polygon area is 0.5*sin(2*pi/k)*sum(r_i * r_{i+1});
    dividing by the all-ones polygon leaves sum(r_i * r_{i+1}) / k.
    """
    r = [float(v) for v in metrics]
    k = len(r)
    if k not in (4, 5):
        raise ValueError(f"area takes 4 (unary) or 5 (binary) metrics, got {k}")
    if any(not (0.0 <= v <= 1.0) or not math.isfinite(v) for v in r):
        raise ValueError("area inputs must be finite and within [0, 1]")
    return sum(r[i] * r[(i + 1) % k] for i in range(k)) / k


@dataclass
class UserResult:
    subject_id: str
    metrics: MetricSet
    confusion: Confusion
    n_train_valid: int
    n_train_imposter: int
    n_test_valid: int
    n_test_imposter: int


@dataclass
class EvalReport:
    modality: str
    scheme: str
    spec: ModelSpec
    selection_method: str
    feature_count: int
    effective_feature_count: int
    split: float
    per_user: dict[str, UserResult] = field(default_factory=dict)
    skipped: dict[str, str] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def metric_values(self, name: str) -> list[float]:
        vals = []
        for sid in sorted(self.per_user):
            v = getattr(self.per_user[sid].metrics, name)
            if v is not None:
                vals.append(v)
        return vals

    def aggregate(self) -> dict:
        """mean/std (sample std) per metric over defined per-user values."""
        out = {}
        for name in METRIC_NAMES:
            vals = self.metric_values(name)
            if not vals:
                out[name] = {"mean": None, "std": None, "n": 0, "excluded": len(self.per_user)}
                continue
            mean = sum(vals) / len(vals)
            std = math.sqrt(sum((v - mean) ** 2 for v in vals) / (len(vals) - 1)) if len(vals) > 1 else 0.0
            out[name] = {"mean": mean, "std": std, "n": len(vals), "excluded": len(self.per_user) - len(vals)}
        return out

    def area_of_means(self) -> float | None:
        """Polygon area of the aggregated metric means (companion view)."""
        order = UNARY_AREA_ORDER if self.spec.is_unary else BINARY_AREA_ORDER
        agg = self.aggregate()
        means = [agg[name]["mean"] for name in order]
        if any(v is None for v in means):
            return None
        return area(means)


def _split_counts(n: int, split: float) -> int:
    return int(math.floor(split * n))


def _user_rows(matrix: FeatureMatrix, subject: str) -> list[int]:
    rows = [i for i, sid in enumerate(matrix.subject_ids) if sid == subject]
    rows.sort(key=lambda i: matrix.window_idx[i])
    return rows


def run_experiment(
    cohort: dict[str, FeatureMatrix],
    spec: ModelSpec,
    scheme: str,
    selection_method: str,
    k: int,
    split: float = DEFAULT_SPLIT,
    correlation_threshold: float = CORRELATION_THRESHOLD,
) -> EvalReport:
    """Train/test once per enrolled subject and aggregate the metrics.

    Per valid user: that subject's windows split sequentially (first 90%
    train, final 10% test); every other subject contributes the same number
    of windows, ceil(n_valid / (N-1)) taken from the start of its stream and
    split 90/10 the same way. Selection transforms fit on training rows only
    (valid-only training rows for the unary scheme), the model trains per
    scheme, and all metrics come from the combined held-out rows.
    """
    if scheme not in ("binary", "unary"):
        raise ValueError(f"scheme must be binary or unary, got {scheme!r}")
    if scheme == "binary" and spec.is_unary:
        raise ValueError(f"{spec.algorithm} is a unary algorithm")
    if scheme == "unary" and not spec.is_unary:
        raise ValueError(f"{spec.algorithm} is a binary algorithm")
    if scheme == "binary" and selection_method not in ("pca", "select_k_best"):
        raise ValueError("binary scheme selects features with pca or select_k_best")
    if scheme == "unary" and selection_method != "low_variance":
        raise ValueError("unary scheme selects features with low_variance")
    subjects = sorted(cohort)
    if len(subjects) < 2:
        raise InsufficientDataError("experiment needs at least 2 subjects")
    if not (0.0 < split < 1.0):
        raise ValueError(f"split must be in (0, 1), got {split}")

    min_windows = math.ceil(1.0 / (1.0 - split))
    report = EvalReport(
        modality=cohort[subjects[0]].modality,
        scheme=scheme,
        spec=spec,
        selection_method=selection_method,
        feature_count=k,
        effective_feature_count=0,
        split=split,
    )
    effective_counts = []
    for valid_user in subjects:
        valid_m = cohort[valid_user]
        n_valid = valid_m.n_rows
        if n_valid < min_windows:
            report.skipped[valid_user] = f"only {n_valid} windows (need >= {min_windows})"
            continue
        rows = _user_rows(valid_m, valid_user)
        n_train_v = _split_counts(n_valid, split)
        train_valid = valid_m.take(rows[:n_train_v]).with_labels(valid_user)
        test_valid = valid_m.take(rows[n_train_v:]).with_labels(valid_user)

        quota = math.ceil(n_valid / (len(subjects) - 1))
        imp_train_parts = []
        imp_test_parts = []
        for other in subjects:
            if other == valid_user:
                continue
            other_m = cohort[other]
            other_rows = _user_rows(other_m, other)[:quota]
            n_train_o = _split_counts(len(other_rows), split)
            if n_train_o > 0:
                imp_train_parts.append(other_m.take(other_rows[:n_train_o]).with_labels(valid_user))
            if len(other_rows) > n_train_o:
                imp_test_parts.append(other_m.take(other_rows[n_train_o:]).with_labels(valid_user))
        if scheme == "binary" and not imp_train_parts:
            report.skipped[valid_user] = "no imposter training rows under the per-imposter quota"
            continue
        if not imp_test_parts:
            report.skipped[valid_user] = "no imposter test rows under the per-imposter quota"
            continue

        if scheme == "binary":
            fit_basis = concat_matrices([train_valid] + imp_train_parts)
            train_m = fit_basis
        else:
            fit_basis = train_valid
            train_m = train_valid
        transforms = fit_two_level(fit_basis, selection_method, k, correlation_threshold)
        effective_counts.append(len(transforms[-1].columns_out))

        model = train(spec, train_m, transforms, valid_user=valid_user)
        test_m = concat_matrices([test_valid] + imp_test_parts)
        predicted = predict(model, test_m)
        scores = score(model, test_m)
        confusion = confusion_from_labels(test_m.labels, predicted)
        metrics = metrics_from_confusion(confusion)
        if scheme == "binary":
            metrics.auc_roc = auc_roc(scores, test_m.labels)
            axis = [getattr(metrics, name) for name in BINARY_AREA_ORDER]
        else:
            axis = [getattr(metrics, name) for name in UNARY_AREA_ORDER]
        metrics.area = area(axis) if all(v is not None for v in axis) else None
        report.per_user[valid_user] = UserResult(
            subject_id=valid_user,
            metrics=metrics,
            confusion=confusion,
            n_train_valid=train_valid.n_rows,
            n_train_imposter=sum(p.n_rows for p in imp_train_parts),
            n_test_valid=test_valid.n_rows,
            n_test_imposter=sum(p.n_rows for p in imp_test_parts),
        )
    if not report.per_user:
        raise InsufficientDataError("no subject had enough windows for the protocol")
    report.effective_feature_count = max(effective_counts)
    if report.effective_feature_count < k:
        report.notes.append(
            f"requested {k} features but only {report.effective_feature_count} were available after selection"
        )
    return report


def relative_loss_values(means: list[dict], metric_names=("grr", "gar", "area")) -> list[dict]:
    """Loss of each row's metrics against the per-column best.

    ``means`` holds one mapping metric -> value per classifier. The loss is
    100*(value - best)/best: zero for the column best, negative otherwise.
    """
    if len(means) < 2:
        raise ValueError("relative loss compares at least 2 rows")
    best = {name: max(m[name] for m in means if m.get(name) is not None) for name in metric_names}
    rows = []
    for m in means:
        row = {}
        for name in metric_names:
            value = m.get(name)
            loss = None if value is None else 100.0 * (value - best[name]) / best[name]
            row[name] = {"value": value, "loss_pct": loss}
        rows.append(row)
    return rows


def relative_loss(reports: list[EvalReport], metric_names=("grr", "gar", "area")) -> list[dict]:
    """Per-metric loss of each report's means relative to the best report."""
    means = []
    for r in reports:
        agg = r.aggregate()
        means.append({name: agg[name]["mean"] for name in metric_names})
    value_rows = relative_loss_values(means, metric_names)
    rows = []
    for r, values in zip(reports, value_rows):
        row = {"classifier": r.spec.describe(), "scheme": r.scheme}
        row.update(values)
        rows.append(row)
    return rows


def feature_count_sweep(
    cohort: dict[str, FeatureMatrix],
    spec: ModelSpec,
    scheme: str,
    selection_method: str,
    counts=(11, 21, 31, 41),
    split: float = DEFAULT_SPLIT,
) -> dict[int, EvalReport]:
    """One full experiment per requested feature count."""
    return {
        int(c): run_experiment(cohort, spec, scheme, selection_method, int(c), split)
        for c in counts
    }
