"""Binary and one-class classifiers behind a single train/predict/score API.

Binary algorithms (rf, knn, nb, svm_rbf, svm_poly) learn valid-vs-imposter;
unary algorithms (ocsvm_rbf, ocsvm_poly) see valid rows only. ``score`` is a
continuous valid-class score (higher = more valid) so every model can feed a
ROC; ``predict`` equals thresholding that score at the documented boundary,
with ties resolved to imposter (false rejection over false acceptance).
"""

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .features import LABEL_IMPOSTER, LABEL_VALID, FeatureMatrix
from .forest import RandomForest, tree_from_dict, tree_to_dict
from .selection import FittedTransform, apply_all, transform_from_dict, transform_to_dict
from .svm import BinarySVM, OneClassSVM

BINARY_ALGORITHMS = ("rf", "knn", "nb", "svm_rbf", "svm_poly")
UNARY_ALGORITHMS = ("ocsvm_rbf", "ocsvm_poly")
ALGORITHMS = BINARY_ALGORITHMS + UNARY_ALGORITHMS

REQUIRED_HYPERPARAMETERS = {
    "rf": ("n_estimators",),
    "knn": ("k", "minkowski_p"),
    "nb": (),
    "svm_rbf": ("gamma", "C"),
    "svm_poly": ("degree", "C"),
    "ocsvm_rbf": ("gamma", "nu"),
    "ocsvm_poly": ("degree", "nu"),
}

NB_VARIANCE_FLOOR = 1e-9

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ModelSpec:
    algorithm: str
    hyperparameters: dict
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        missing = [h for h in REQUIRED_HYPERPARAMETERS[self.algorithm] if h not in self.hyperparameters]
        if missing:
            raise ValueError(f"{self.algorithm} spec missing hyperparameters: {missing}")

    @property
    def is_unary(self) -> bool:
        return self.algorithm in UNARY_ALGORITHMS

    def describe(self) -> str:
        params = ", ".join(f"{k}={self.hyperparameters[k]}" for k in sorted(self.hyperparameters))
        return f"{self.algorithm}({params})" if params else self.algorithm


# Hyperparameter sets reported for each modality/scheme, shipped as presets.
# The unary SpO2 poly degree is reported inconsistently (2 in the model table,
# 4 in the loss table); both variants are provided.
PRESETS: dict[str, ModelSpec] = {
    "hr_binary_rf": ModelSpec("rf", {"n_estimators": 50}),
    "hr_binary_knn": ModelSpec("knn", {"k": 5, "minkowski_p": 2}),
    "hr_binary_nb": ModelSpec("nb", {}),
    "hr_binary_svm_rbf": ModelSpec("svm_rbf", {"gamma": 0.05, "C": 5}),
    "hr_binary_svm_poly": ModelSpec("svm_poly", {"degree": 3, "C": 12}),
    "hr_unary_rbf": ModelSpec("ocsvm_rbf", {"gamma": 0.05, "nu": 0.5}),
    "hr_unary_poly": ModelSpec("ocsvm_poly", {"degree": 1, "nu": 0.5}),
    "spo2_binary_rf": ModelSpec("rf", {"n_estimators": 50}),
    "spo2_binary_knn": ModelSpec("knn", {"k": 5, "minkowski_p": 2}),
    "spo2_binary_nb": ModelSpec("nb", {}),
    "spo2_binary_svm_rbf": ModelSpec("svm_rbf", {"gamma": 0.05, "C": 5}),
    "spo2_binary_svm_poly": ModelSpec("svm_poly", {"degree": 3, "C": 14}),
    "spo2_unary_rbf": ModelSpec("ocsvm_rbf", {"gamma": 0.05, "nu": 0.5}),
    "spo2_unary_poly": ModelSpec("ocsvm_poly", {"degree": 2, "nu": 0.5}),
    "spo2_unary_poly_alt": ModelSpec("ocsvm_poly", {"degree": 4, "nu": 0.5}),
    "hrspo2_binary_rf": ModelSpec("rf", {"n_estimators": 50}),
    "hrspo2_binary_knn": ModelSpec("knn", {"k": 2, "minkowski_p": 2}),
    "hrspo2_binary_nb": ModelSpec("nb", {}),
    "hrspo2_binary_svm_rbf": ModelSpec("svm_rbf", {"gamma": 0.08, "C": 3}),
    "hrspo2_binary_svm_poly": ModelSpec("svm_poly", {"degree": 4, "C": 16}),
    "hrspo2_unary_rbf": ModelSpec("ocsvm_rbf", {"gamma": 0.05, "nu": 0.5}),
    "hrspo2_unary_poly": ModelSpec("ocsvm_poly", {"degree": 1, "nu": 0.75}),
}

# Grid-search defaults centered on the reported optima.
DEFAULT_GRIDS: dict[str, dict] = {
    "rf": {"n_estimators": [25, 50, 100]},
    "knn": {"k": [1, 2, 5, 7], "minkowski_p": [2]},
    "svm_rbf": {"gamma": [0.01, 0.05, 0.08, 0.1], "C": [1, 3, 5, 12, 16]},
    "svm_poly": {"degree": [1, 2, 3, 4], "C": [3, 5, 12, 14, 16]},
    "ocsvm_rbf": {"gamma": [0.01, 0.05, 0.08, 0.1], "nu": [0.25, 0.5, 0.75]},
    "ocsvm_poly": {"degree": [1, 2, 4], "nu": [0.5, 0.75]},
}


@dataclass
class TrainedModel:
    spec: ModelSpec
    transforms: list[FittedTransform]
    valid_user: str | None
    modality: str | None
    # algorithm-specific learned state
    forest: RandomForest | None = None
    knn_x: np.ndarray | None = field(default=None, repr=False)
    knn_y: np.ndarray | None = field(default=None, repr=False)
    nb_params: dict | None = None
    svm: BinarySVM | None = None
    ocsvm: OneClassSVM | None = None


def _poly_gamma(hp: dict, n_features: int) -> float:
    # poly kernels default gamma to 1/n_features unless set explicitly
    return float(hp.get("gamma", 1.0 / max(1, n_features)))


def _fit_nb(x: np.ndarray, y: np.ndarray) -> dict:
    params = {}
    n = len(y)
    for cls in (-1, 1):
        rows = x[y == cls]
        var = rows.var(axis=0)
        params[cls] = {
            "prior": len(rows) / n,
            "mean": rows.mean(axis=0),
            "var": np.maximum(var, NB_VARIANCE_FLOOR),
        }
    return params


def _nb_posterior_valid(params: dict, x: np.ndarray) -> np.ndarray:
    log_joint = {}
    for cls in (-1, 1):
        p = params[cls]
        ll = -0.5 * np.sum(np.log(2.0 * math.pi * p["var"]) + (x - p["mean"]) ** 2 / p["var"], axis=1)
        log_joint[cls] = math.log(p["prior"]) + ll
    a = log_joint[1]
    b = log_joint[-1]
    m = np.maximum(a, b)
    return np.exp(a - m) / (np.exp(a - m) + np.exp(b - m))


def _minkowski_distances(train_x: np.ndarray, x: np.ndarray, p: float) -> np.ndarray:
    diff = np.abs(x[:, None, :] - train_x[None, :, :])
    if p == math.inf:
        return diff.max(axis=2)
    return (diff**p).sum(axis=2) ** (1.0 / p)


def _knn_valid_fraction(model: TrainedModel, x: np.ndarray) -> np.ndarray:
    k = int(model.spec.hyperparameters["k"])
    p = float(model.spec.hyperparameters["minkowski_p"])
    dist = _minkowski_distances(model.knn_x, x, p)
    n_train = model.knn_x.shape[0]
    k = min(k, n_train)
    fractions = np.empty(len(x))
    for i in range(len(x)):
        # stable neighbor order: distance, then training-row index
        order = np.lexsort((np.arange(n_train), dist[i]))[:k]
        fractions[i] = float(np.sum(model.knn_y[order] > 0)) / k
    return fractions


def train(spec: ModelSpec, train_matrix: FeatureMatrix, transforms: list[FittedTransform] | None = None,
          valid_user: str | None = None) -> TrainedModel:
    """Fit ``spec`` on (already transformed or raw+transforms) training rows.

    When ``transforms`` is given, ``train_matrix`` must be in the original
    column space and is projected before fitting; predict/score then accept
    original-space matrices. Binary algorithms demand both labels; unary
    algorithms reject any imposter row.
    """
    transforms = list(transforms or [])
    m = apply_all(transforms, train_matrix) if transforms else train_matrix
    if m.n_rows == 0:
        raise ValueError("empty training set")
    labels = m.label_array()
    model = TrainedModel(
        spec=spec,
        transforms=transforms,
        valid_user=valid_user,
        modality=m.modality,
    )
    x = m.values
    hp = spec.hyperparameters
    if spec.is_unary:
        if np.any(labels < 0):
            raise ValueError("unary training data must contain valid-user rows only")
        kind = "rbf" if spec.algorithm == "ocsvm_rbf" else "poly"
        gamma = float(hp["gamma"]) if kind == "rbf" else _poly_gamma(hp, x.shape[1])
        degree = int(hp.get("degree", 3))
        model.ocsvm = OneClassSVM(kind, gamma, degree, float(hp["nu"])).fit(x)
        return model

    if len(set(labels.tolist())) < 2:
        raise ValueError("binary training data must contain both labels")
    if spec.algorithm == "rf":
        model.forest = RandomForest(int(hp["n_estimators"]), spec.seed).fit(x, labels)
    elif spec.algorithm == "knn":
        model.knn_x = x.copy()
        model.knn_y = labels.copy()
    elif spec.algorithm == "nb":
        model.nb_params = _fit_nb(x, labels)
    elif spec.algorithm in ("svm_rbf", "svm_poly"):
        kind = "rbf" if spec.algorithm == "svm_rbf" else "poly"
        gamma = float(hp["gamma"]) if kind == "rbf" else _poly_gamma(hp, x.shape[1])
        degree = int(hp.get("degree", 3))
        model.svm = BinarySVM(kind, gamma, degree, float(hp["C"])).fit(x, labels.astype(float))
    else:  # pragma: no cover - ModelSpec already validates
        raise ValueError(f"unknown algorithm {spec.algorithm!r}")
    return model


def score(model: TrainedModel, rows: FeatureMatrix) -> np.ndarray:
    """Continuous valid-class score per row (higher = more valid)."""
    m = apply_all(model.transforms, rows) if model.transforms else rows
    x = m.values
    alg = model.spec.algorithm
    if alg == "rf":
        return model.forest.vote_fraction(x)
    if alg == "knn":
        return _knn_valid_fraction(model, x)
    if alg == "nb":
        return _nb_posterior_valid(model.nb_params, x)
    if alg in ("svm_rbf", "svm_poly"):
        return model.svm.decision_function(x)
    return model.ocsvm.decision_function(x)


def predict(model: TrainedModel, rows: FeatureMatrix) -> list[str]:
    """valid/imposter per row; thresholds score at the documented boundary.

    Vote-fraction models (rf, knn) accept above 1/2, nb above posterior 1/2,
    margin models (svm, ocsvm) above decision value 0 -- boundaries themselves
    reject.
    """
    s = score(model, rows)
    alg = model.spec.algorithm
    boundary = 0.5 if alg in ("rf", "knn", "nb") else 0.0
    return [LABEL_VALID if v > boundary else LABEL_IMPOSTER for v in s]


def grid_search(algorithm: str, grid: dict, train_matrix: FeatureMatrix, folds: int = 3,
                seed: int = 0) -> ModelSpec:
    """Exhaustive cross-validated search; ties keep the earliest candidate.

    Rows are dealt round-robin into ``folds`` folds; candidate accuracy is the
    mean fraction of correct held-out predictions. Candidate order follows the
    grid's key/value order, so results are deterministic.
    """
    if not grid:
        raise ValueError("grid must be non-empty")
    n = train_matrix.n_rows
    if n < folds:
        raise ValueError(f"{folds}-fold search infeasible on {n} rows")
    names = list(grid)
    fold_of = np.arange(n) % folds
    best = None
    for combo in itertools.product(*(grid[name] for name in names)):
        spec = ModelSpec(algorithm, dict(zip(names, combo)), seed=seed)
        correct = 0
        total = 0
        for f in range(folds):
            train_rows = np.nonzero(fold_of != f)[0]
            test_rows = np.nonzero(fold_of == f)[0]
            fold_train = train_matrix.take(train_rows)
            if spec.is_unary:
                fold_train = fold_train.take(
                    [i for i, lb in enumerate(fold_train.labels) if lb == LABEL_VALID]
                )
            model = train(spec, fold_train)
            predicted = predict(model, train_matrix.take(test_rows))
            actual = [train_matrix.labels[i] for i in test_rows]
            correct += sum(int(p == a) for p, a in zip(predicted, actual))
            total += len(test_rows)
        accuracy = correct / total
        if best is None or accuracy > best[0]:
            best = (accuracy, spec)
    return best[1]


def model_to_dict(model: TrainedModel) -> dict:
    payload = {
        "version": MODEL_FORMAT_VERSION,
        "spec": {
            "algorithm": model.spec.algorithm,
            "hyperparameters": model.spec.hyperparameters,
            "seed": model.spec.seed,
        },
        "transforms": [transform_to_dict(t) for t in model.transforms],
        "valid_user": model.valid_user,
        "modality": model.modality,
    }
    alg = model.spec.algorithm
    if alg == "rf":
        payload["trees"] = [tree_to_dict(t) for t in model.forest.trees]
    elif alg == "knn":
        payload["train_x"] = model.knn_x.tolist()
        payload["train_y"] = model.knn_y.tolist()
    elif alg == "nb":
        payload["classes"] = {
            str(cls): {"prior": p["prior"], "mean": p["mean"].tolist(), "var": p["var"].tolist()}
            for cls, p in model.nb_params.items()
        }
    elif alg in ("svm_rbf", "svm_poly"):
        payload["svm"] = {
            "kernel": model.svm.kernel_kind,
            "gamma": model.svm.gamma,
            "degree": model.svm.degree,
            "C": model.svm.C,
            "support_vectors": model.svm.support_vectors.tolist(),
            "dual_coef": model.svm.dual_coef.tolist(),
            "bias": model.svm.bias,
        }
    else:
        payload["ocsvm"] = {
            "kernel": model.ocsvm.kernel_kind,
            "gamma": model.ocsvm.gamma,
            "degree": model.ocsvm.degree,
            "nu": model.ocsvm.nu,
            "support_vectors": model.ocsvm.support_vectors.tolist(),
            "dual_coef": model.ocsvm.dual_coef.tolist(),
            "rho": model.ocsvm.rho,
        }
    return payload


def model_from_dict(payload: dict) -> TrainedModel:
    if payload.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {payload.get('version')!r}")
    spec = ModelSpec(
        payload["spec"]["algorithm"],
        dict(payload["spec"]["hyperparameters"]),
        int(payload["spec"]["seed"]),
    )
    model = TrainedModel(
        spec=spec,
        transforms=[transform_from_dict(t) for t in payload["transforms"]],
        valid_user=payload.get("valid_user"),
        modality=payload.get("modality"),
    )
    alg = spec.algorithm
    if alg == "rf":
        forest = RandomForest(int(spec.hyperparameters["n_estimators"]), spec.seed)
        forest.trees = [tree_from_dict(t) for t in payload["trees"]]
        model.forest = forest
    elif alg == "knn":
        model.knn_x = np.asarray(payload["train_x"], dtype=float)
        model.knn_y = np.asarray(payload["train_y"], dtype=int)
    elif alg == "nb":
        model.nb_params = {
            int(cls): {
                "prior": float(p["prior"]),
                "mean": np.asarray(p["mean"], dtype=float),
                "var": np.asarray(p["var"], dtype=float),
            }
            for cls, p in payload["classes"].items()
        }
    elif alg in ("svm_rbf", "svm_poly"):
        s = payload["svm"]
        svm = BinarySVM(s["kernel"], float(s["gamma"]), int(s["degree"]), float(s["C"]))
        svm.support_vectors = np.asarray(s["support_vectors"], dtype=float)
        svm.dual_coef = np.asarray(s["dual_coef"], dtype=float)
        svm.bias = float(s["bias"])
        model.svm = svm
    else:
        s = payload["ocsvm"]
        ocsvm = OneClassSVM(s["kernel"], float(s["gamma"]), int(s["degree"]), float(s["nu"]))
        ocsvm.support_vectors = np.asarray(s["support_vectors"], dtype=float)
        ocsvm.dual_coef = np.asarray(s["dual_coef"], dtype=float)
        ocsvm.rho = float(s["rho"])
        model.ocsvm = ocsvm
    return model


def save_model(model: TrainedModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True)


def load_model(path) -> TrainedModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
