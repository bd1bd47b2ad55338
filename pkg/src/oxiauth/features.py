"""Windowed statistical features and labeled feature matrices.

Each 10-sample window yields 21 statistics per signal. Conventions, pinned so
results are reproducible bit-for-bit:

* moments use the population (1/n) normalization, so variance = std^2,
  power = energy/n, rms = sqrt(power) and rss = sqrt(energy) hold exactly;
* quartiles interpolate linearly between order statistics (q1 at sorted
  position (n-1)/4);
* kurtosis is excess kurtosis (normal -> 0);
* snr = mean/std; any statistic whose denominator is zero (constant window,
  zero-sum range or quartiles) is defined as 0 so downstream models never
  see NaN or inf.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError

STAT_NAMES = (
    "mean",
    "median",
    "std",
    "variance",
    "coeff_variance",
    "range",
    "coeff_range",
    "q1",
    "q3",
    "max",
    "iqr",
    "coeff_iqr",
    "mean_abs_dev",
    "median_abs_dev",
    "energy",
    "power",
    "rms",
    "rss",
    "snr",
    "skewness",
    "kurtosis",
)

MODALITIES = ("HR", "SPO2", "HR_SPO2")

LABEL_VALID = "valid"
LABEL_IMPOSTER = "imposter"


def _safe_div(num: float, den: float) -> float:
    return num / den if den != 0.0 else 0.0


def stat_features(x) -> dict[str, float]:
    """Compute the 21 window statistics for one signal.

    Returns a name -> value mapping in canonical STAT_NAMES order.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != 10:
        raise ValueError(f"expected exactly 10 samples, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")

    n = x.size
    mu = float(np.mean(x))
    sigma = float(np.std(x))  # population
    med = float(np.median(x))
    xmax = float(np.max(x))
    xmin = float(np.min(x))
    q1 = float(np.percentile(x, 25))
    q3 = float(np.percentile(x, 75))
    energy = float(np.sum(x * x))
    power = energy / n

    if sigma > 0.0:
        z = (x - mu) / sigma
        skew = float(np.mean(z**3))
        kurt = float(np.mean(z**4) - 3.0)
    else:
        skew = 0.0
        kurt = 0.0

    return {
        "mean": mu,
        "median": med,
        "std": sigma,
        "variance": sigma * sigma,
        "coeff_variance": _safe_div(sigma, mu),
        "range": xmax - xmin,
        "coeff_range": _safe_div(xmax - xmin, xmax + xmin),
        "q1": q1,
        "q3": q3,
        "max": xmax,
        "iqr": q3 - q1,
        "coeff_iqr": _safe_div(q3 - q1, q3 + q1),
        "mean_abs_dev": float(np.mean(np.abs(x - mu))),
        "median_abs_dev": float(np.median(np.abs(x - med))),
        "energy": energy,
        "power": power,
        "rms": float(np.sqrt(power)),
        "rss": float(np.sqrt(energy)),
        "snr": _safe_div(mu, sigma),
        "skewness": skew,
        "kurtosis": kurt,
    }


@dataclass
class FeatureMatrix:
    """Rows of windows x columns of named features, with row identity.

    ``labels[i]`` is "valid", "imposter" or None (unlabeled). ``values`` is an
    (n_rows, n_cols) float array aligned with ``column_names``.
    """

    modality: str
    column_names: list[str]
    subject_ids: list[str]
    window_idx: list[int]
    labels: list[str | None]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"unknown modality {self.modality!r}")
        n = len(self.subject_ids)
        if not (len(self.window_idx) == len(self.labels) == n and self.values.shape == (n, len(self.column_names))):
            raise ValueError("inconsistent row/column dimensions")

    @property
    def n_rows(self) -> int:
        return len(self.subject_ids)

    def take(self, indices) -> "FeatureMatrix":
        """Row subset, preserving order of ``indices``."""
        indices = list(indices)
        return FeatureMatrix(
            modality=self.modality,
            column_names=list(self.column_names),
            subject_ids=[self.subject_ids[i] for i in indices],
            window_idx=[self.window_idx[i] for i in indices],
            labels=[self.labels[i] for i in indices],
            values=self.values[indices].copy(),
        )

    def with_labels(self, valid_subject: str) -> "FeatureMatrix":
        """Label every row valid/imposter relative to one enrolled subject."""
        labels = [LABEL_VALID if sid == valid_subject else LABEL_IMPOSTER for sid in self.subject_ids]
        return FeatureMatrix(
            self.modality, list(self.column_names), list(self.subject_ids), list(self.window_idx), labels,
            self.values.copy(),
        )

    def label_array(self) -> np.ndarray:
        """Labels as +1 (valid) / -1 (imposter); raises on unlabeled rows."""
        if any(lb is None for lb in self.labels):
            raise ValueError("matrix contains unlabeled rows")
        return np.array([1 if lb == LABEL_VALID else -1 for lb in self.labels], dtype=int)


def concat_matrices(parts) -> FeatureMatrix:
    parts = list(parts)
    if not parts:
        raise ValueError("nothing to concatenate")
    first = parts[0]
    for p in parts[1:]:
        if p.column_names != first.column_names or p.modality != first.modality:
            raise ValueError("matrices differ in columns or modality")
    return FeatureMatrix(
        modality=first.modality,
        column_names=list(first.column_names),
        subject_ids=[sid for p in parts for sid in p.subject_ids],
        window_idx=[w for p in parts for w in p.window_idx],
        labels=[lb for p in parts for lb in p.labels],
        values=np.vstack([p.values for p in parts]),
    )


def feature_columns(modality: str) -> list[str]:
    if modality == "HR":
        return [f"hr_{s}" for s in STAT_NAMES] + ["rep_zone"]
    if modality == "SPO2":
        return [f"spo2_{s}" for s in STAT_NAMES] + ["rep_zone"]
    if modality == "HR_SPO2":
        return [f"hr_{s}" for s in STAT_NAMES] + [f"spo2_{s}" for s in STAT_NAMES] + ["rep_zone"]
    raise ValueError(f"unknown modality {modality!r}")


def build_matrix(windows, modality: str) -> FeatureMatrix:
    """Assemble the per-window feature matrix for one modality.

    Every modality carries the representative heart-rate zone as its final
    column: 21+1 columns for HR or SPO2, 21+21+1 for HR_SPO2. Rows are
    unlabeled; window_idx numbers windows per subject in input order.
    """
    windows = list(windows)
    if not windows:
        raise ValueError("at least one window is required")
    columns = feature_columns(modality)
    rows = []
    subject_ids = []
    window_idx = []
    counters: dict[str, int] = {}
    for w in windows:
        parts = []
        if modality in ("HR", "HR_SPO2"):
            stats = stat_features(w.hr_values())
            parts.extend(stats[s] for s in STAT_NAMES)
        if modality in ("SPO2", "HR_SPO2"):
            stats = stat_features(w.spo2_values())
            parts.extend(stats[s] for s in STAT_NAMES)
        parts.append(float(w.rep_zone))
        rows.append(parts)
        subject_ids.append(w.subject_id)
        idx = counters.get(w.subject_id, 0)
        window_idx.append(idx)
        counters[w.subject_id] = idx + 1
    return FeatureMatrix(
        modality=modality,
        column_names=columns,
        subject_ids=subject_ids,
        window_idx=window_idx,
        labels=[None] * len(rows),
        values=np.array(rows, dtype=float),
    )


def save_matrix_csv(matrix: FeatureMatrix, path) -> None:
    """Persist with header row; first three columns identify each window."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject_id", "window_idx", "label"] + list(matrix.column_names))
        for i in range(matrix.n_rows):
            label = matrix.labels[i] if matrix.labels[i] is not None else ""
            writer.writerow(
                [matrix.subject_ids[i], matrix.window_idx[i], label]
                + [repr(float(v)) for v in matrix.values[i]]
            )


def load_matrix_csv(path, modality: str) -> FeatureMatrix:
    path = Path(path)
    if not path.exists():
        raise ParseError("feature matrix not found", path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:3] != ["subject_id", "window_idx", "label"]:
            raise ParseError("expected subject_id,window_idx,label,... header", path, 1)
        columns = header[3:]
        subject_ids, window_idx, labels, rows = [], [], [], []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != 3 + len(columns):
                raise ParseError(f"expected {3 + len(columns)} cells, got {len(row)}", path, line_no)
            subject_ids.append(row[0])
            window_idx.append(int(row[1]))
            labels.append(row[2] if row[2] else None)
            try:
                rows.append([float(v) for v in row[3:]])
            except ValueError:
                raise ParseError("non-numeric feature value", path, line_no) from None
    return FeatureMatrix(
        modality=modality,
        column_names=columns,
        subject_ids=subject_ids,
        window_idx=window_idx,
        labels=labels,
        values=np.array(rows, dtype=float) if rows else np.empty((0, len(columns))),
    )
