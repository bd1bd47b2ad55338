"""Two-level feature selection fitted on training rows only.

Level one drops one column of every pair whose |Pearson r| exceeds the
threshold. Level two is PCA or ANOVA-F K-best for binary models, or a
lowest-dispersion ranking for unary models. Every transform records the
column names it was fitted on and refuses to apply to anything else, which
keeps train/test hygiene checkable.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .features import FeatureMatrix, LABEL_VALID

CORRELATION_THRESHOLD = 0.9

KINDS = ("correlation_filter", "pca", "select_k_best", "low_variance")


@dataclass(frozen=True)
class FittedTransform:
    kind: str
    columns_in: tuple[str, ...]
    # correlation_filter / select_k_best / low_variance
    kept_columns: tuple[str, ...] = ()
    # pca
    mean: np.ndarray | None = field(default=None, repr=False)
    std: np.ndarray | None = field(default=None, repr=False)
    components: np.ndarray | None = field(default=None, repr=False)  # (k, d)
    explained_variance: np.ndarray | None = field(default=None, repr=False)
    k: int = 0

    @property
    def columns_out(self) -> tuple[str, ...]:
        if self.kind == "pca":
            return tuple(f"pc{i + 1}" for i in range(self.k))
        return self.kept_columns


def _training_values(m: FeatureMatrix) -> np.ndarray:
    if m.n_rows < 2:
        raise ValueError("fitting requires at least 2 rows")
    return m.values


def correlation_filter(m: FeatureMatrix, threshold: float = CORRELATION_THRESHOLD) -> FittedTransform:
    """Drop the later column of every pair with |Pearson r| > threshold.

    Pairs are scanned in canonical column order, and a column already dropped
    no longer knocks out anything after it. Constant columns have undefined
    correlation, which is treated as 0 (kept).
    """
    x = _training_values(m)
    d = x.shape[1]
    std = x.std(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.corrcoef(x, rowvar=False)
    corr = np.nan_to_num(corr, nan=0.0)
    # corrcoef of a 1-column matrix degenerates to a scalar
    corr = np.atleast_2d(corr)
    keep = [True] * d
    for i in range(d):
        if not keep[i]:
            continue
        for j in range(i + 1, d):
            if not keep[j]:
                continue
            if std[i] == 0.0 or std[j] == 0.0:
                continue
            if abs(corr[i, j]) > threshold:
                keep[j] = False
    kept = tuple(c for c, k in zip(m.column_names, keep) if k)
    return FittedTransform(kind="correlation_filter", columns_in=tuple(m.column_names), kept_columns=kept)


def pca_fit(m: FeatureMatrix, k: int) -> FittedTransform:
    """Principal components of the z-scored training data.

    Columns are standardized with training means/stds (zero-variance columns
    map to constant 0). Components are eigenvectors of the covariance of the
    standardized data, ordered by descending eigenvalue, each sign-fixed so
    its largest-magnitude loading is positive. ``k`` is clamped to the
    available dimension.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    x = _training_values(m)
    d = x.shape[1]
    mean = x.mean(axis=0)
    std = x.std(axis=0)  # population, consistent with the covariance below
    safe_std = np.where(std == 0.0, 1.0, std)
    z = (x - mean) / safe_std
    z[:, std == 0.0] = 0.0
    cov = (z.T @ z) / x.shape[0]
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    k = min(k, d)
    components = eigvecs[:, :k].T.copy()
    for row in components:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1.0
    return FittedTransform(
        kind="pca",
        columns_in=tuple(m.column_names),
        mean=mean,
        std=std,
        components=components,
        explained_variance=eigvals.copy(),
        k=k,
    )


def _anova_f_scores(x: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """One-way ANOVA F statistic per column for the two label groups."""
    groups = [x[labels == 1], x[labels == -1]]
    n = x.shape[0]
    grand = x.mean(axis=0)
    ss_between = sum(len(g) * (g.mean(axis=0) - grand) ** 2 for g in groups)
    ss_within = sum(((g - g.mean(axis=0)) ** 2).sum(axis=0) for g in groups)
    ms_between = ss_between / (2 - 1)
    ms_within = ss_within / (n - 2)
    scores = np.empty(x.shape[1])
    for j in range(x.shape[1]):
        if ms_within[j] == 0.0:
            scores[j] = 0.0 if ms_between[j] == 0.0 else np.inf
        else:
            scores[j] = ms_between[j] / ms_within[j]
    return scores


def select_k_best(m: FeatureMatrix, k: int) -> FittedTransform:
    """Keep the k columns with the highest ANOVA F score between labels."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    x = _training_values(m)
    labels = m.label_array()
    if len(set(labels.tolist())) < 2:
        raise ValueError("select_k_best needs both labels in the training rows")
    scores = _anova_f_scores(x, labels)
    k = min(k, x.shape[1])
    # ties broken by canonical column order: stable sort on negated scores
    order = sorted(range(x.shape[1]), key=lambda j: (-scores[j], j))[:k]
    kept = tuple(m.column_names[j] for j in sorted(order))
    return FittedTransform(kind="select_k_best", columns_in=tuple(m.column_names), kept_columns=kept, k=k)


def low_variance_select(m: FeatureMatrix, k: int) -> FittedTransform:
    """Keep the k most stable columns of the (valid-user) training rows.

    Stability is ranked by coefficient of variation std/|mean| ascending,
    which keeps the comparison unit-free across heterogeneous features;
    zero-mean columns rank last.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    x = _training_values(m)
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    cov = np.where(np.abs(mean) > 0.0, std / np.abs(np.where(mean == 0.0, 1.0, mean)), np.inf)
    k = min(k, x.shape[1])
    order = sorted(range(x.shape[1]), key=lambda j: (cov[j], j))[:k]
    kept = tuple(m.column_names[j] for j in sorted(order))
    return FittedTransform(kind="low_variance", columns_in=tuple(m.column_names), kept_columns=kept, k=k)


def apply(t: FittedTransform, m: FeatureMatrix) -> FeatureMatrix:
    """Project/filter rows; identities and labels pass through unchanged."""
    if tuple(m.column_names) != t.columns_in:
        raise ValueError(
            f"matrix columns do not match the columns the {t.kind} transform was fitted on"
        )
    if t.kind == "pca":
        safe_std = np.where(t.std == 0.0, 1.0, t.std)
        z = (m.values - t.mean) / safe_std
        z[:, t.std == 0.0] = 0.0
        values = z @ t.components.T
        columns = list(t.columns_out)
    else:
        index = {c: j for j, c in enumerate(m.column_names)}
        cols = [index[c] for c in t.kept_columns]
        values = m.values[:, cols].copy()
        columns = list(t.kept_columns)
    return FeatureMatrix(
        modality=m.modality,
        column_names=columns,
        subject_ids=list(m.subject_ids),
        window_idx=list(m.window_idx),
        labels=list(m.labels),
        values=values,
    )


def fit_two_level(
    m: FeatureMatrix,
    method: str,
    k: int,
    threshold: float = CORRELATION_THRESHOLD,
) -> list[FittedTransform]:
    """Correlation filter followed by the second-level method.

    ``method`` is "pca" or "select_k_best" (binary models) or "low_variance"
    (unary models, expects valid-only training rows).
    """
    first = correlation_filter(m, threshold)
    reduced = apply(first, m)
    if method == "pca":
        second = pca_fit(reduced, k)
    elif method == "select_k_best":
        second = select_k_best(reduced, k)
    elif method == "low_variance":
        second = low_variance_select(reduced, k)
    else:
        raise ValueError(f"unknown selection method {method!r}")
    return [first, second]


def apply_all(transforms, m: FeatureMatrix) -> FeatureMatrix:
    for t in transforms:
        m = apply(t, m)
    return m


def transform_to_dict(t: FittedTransform) -> dict:
    payload = {"kind": t.kind, "columns_in": list(t.columns_in), "k": t.k}
    if t.kind == "pca":
        payload.update(
            mean=t.mean.tolist(),
            std=t.std.tolist(),
            components=t.components.tolist(),
            explained_variance=t.explained_variance.tolist(),
        )
    else:
        payload["kept_columns"] = list(t.kept_columns)
    return payload


def transform_from_dict(payload: dict) -> FittedTransform:
    kind = payload["kind"]
    if kind not in KINDS:
        raise ValueError(f"unknown transform kind {kind!r}")
    if kind == "pca":
        return FittedTransform(
            kind=kind,
            columns_in=tuple(payload["columns_in"]),
            mean=np.asarray(payload["mean"], dtype=float),
            std=np.asarray(payload["std"], dtype=float),
            components=np.asarray(payload["components"], dtype=float),
            explained_variance=np.asarray(payload["explained_variance"], dtype=float),
            k=int(payload["k"]),
        )
    return FittedTransform(
        kind=kind,
        columns_in=tuple(payload["columns_in"]),
        kept_columns=tuple(payload["kept_columns"]),
        k=int(payload.get("k", 0)),
    )


def transforms_to_json(transforms) -> str:
    return json.dumps([transform_to_dict(t) for t in transforms], sort_keys=True)


def transforms_from_json(text: str) -> list[FittedTransform]:
    return [transform_from_dict(p) for p in json.loads(text)]
