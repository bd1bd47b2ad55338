import json

import numpy as np
import pytest

from oxiauth import selection
from oxiauth.features import LABEL_IMPOSTER, LABEL_VALID, FeatureMatrix
from oxiauth.selection import (
    apply,
    apply_all,
    correlation_filter,
    fit_two_level,
    low_variance_select,
    pca_fit,
    select_k_best,
    transforms_from_json,
    transforms_to_json,
)


def matrix(values, columns=None, labels=None, modality="HR"):
    values = np.asarray(values, dtype=float)
    n, d = values.shape
    return FeatureMatrix(
        modality=modality,
        column_names=columns or [f"c{j}" for j in range(d)],
        subject_ids=[f"s{i}" for i in range(n)],
        window_idx=list(range(n)),
        labels=labels if labels is not None else [None] * n,
        values=values,
    )


def test_correlation_filter_drops_later_of_identical_pair():
    rng = np.random.default_rng(0)
    f = rng.normal(size=50)
    m = matrix(np.column_stack([f, 2 * f + 1, rng.normal(size=50)]))
    t = correlation_filter(m)
    assert t.kept_columns == ("c0", "c2")


def test_correlation_filter_keeps_independent_noise():
    rng = np.random.default_rng(1)
    a = rng.normal(size=400)
    b = rng.normal(size=400)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.1
    t = correlation_filter(matrix(np.column_stack([a, b])))
    assert t.kept_columns == ("c0", "c1")


def test_correlation_filter_strict_inequality_at_threshold_one():
    rng = np.random.default_rng(2)
    f = rng.normal(size=30)
    m = matrix(np.column_stack([f, f + rng.normal(scale=1e-3, size=30)]))
    t = correlation_filter(m, threshold=1.0)
    assert t.kept_columns == ("c0", "c1")


def test_correlation_filter_constant_column_kept():
    rng = np.random.default_rng(3)
    m = matrix(np.column_stack([np.full(20, 7.0), rng.normal(size=20)]))
    t = correlation_filter(m)
    assert t.kept_columns == ("c0", "c1")


def test_pca_axis_aligned_variance():
    rng = np.random.default_rng(4)
    x = np.column_stack([rng.normal(scale=3.0, size=100), np.zeros(100)])
    t = pca_fit(matrix(x), k=1)
    # all variance on column 0 (column 1 constant maps to 0)
    assert abs(t.components[0, 0]) == pytest.approx(1.0, abs=1e-9)
    assert t.components[0, 1] == pytest.approx(0.0, abs=1e-9)


def test_pca_full_dimension_round_trip():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(40, 6)) @ rng.normal(size=(6, 6))
    m = matrix(x)
    t = pca_fit(m, k=6)
    scores = apply(t, m).values
    z = (x - t.mean) / t.std
    recon = scores @ t.components
    assert np.allclose(recon, z, atol=1e-9)


def test_pca_trace_preservation_and_orthonormality():
    rng = np.random.default_rng(6)
    for _ in range(20):
        d = int(rng.integers(2, 8))
        x = rng.normal(size=(30, d)) * rng.uniform(0.5, 4.0, size=d)
        t = pca_fit(matrix(x), k=d)
        gram = t.components @ t.components.T
        assert np.allclose(gram, np.eye(d), atol=1e-9)
        # standardized data has unit variance per (non-constant) column
        assert np.sum(t.explained_variance) == pytest.approx(d, abs=1e-9)


def test_pca_sign_convention():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(50, 4))
    t = pca_fit(matrix(x), k=4)
    for row in t.components:
        assert row[np.argmax(np.abs(row))] > 0


def test_pca_k_clamped():
    rng = np.random.default_rng(8)
    t = pca_fit(matrix(rng.normal(size=(10, 3))), k=31)
    assert t.k == 3


def labeled_matrix(x, labels):
    return matrix(x, labels=[LABEL_VALID if v else LABEL_IMPOSTER for v in labels])


def test_select_k_best_perfect_separator_kept():
    rng = np.random.default_rng(9)
    labels = [True] * 10 + [False] * 10
    label_col = np.array([1.0] * 10 + [0.0] * 10)
    noise = rng.normal(size=20)
    m = labeled_matrix(np.column_stack([noise, label_col]), labels)
    t = select_k_best(m, k=1)
    assert t.kept_columns == ("c1",)


def test_select_k_best_separator_beats_noise():
    rng = np.random.default_rng(10)
    labels = [True] * 20 + [False] * 20
    sep = np.concatenate([rng.normal(5, 1, 20), rng.normal(-5, 1, 20)])
    noise = rng.normal(size=40)
    m = labeled_matrix(np.column_stack([noise, sep]), labels)
    t = select_k_best(m, k=1)
    assert t.kept_columns == ("c1",)


def test_select_k_best_identity_when_k_large():
    rng = np.random.default_rng(11)
    labels = [True] * 5 + [False] * 5
    m = labeled_matrix(rng.normal(size=(10, 3)), labels)
    t = select_k_best(m, k=10)
    assert t.kept_columns == ("c0", "c1", "c2")


def test_select_k_best_needs_both_labels():
    m = labeled_matrix(np.random.default_rng(0).normal(size=(6, 2)), [True] * 6)
    with pytest.raises(ValueError):
        select_k_best(m, k=1)


def test_low_variance_prefers_constant():
    rng = np.random.default_rng(12)
    m = matrix(np.column_stack([np.full(20, 5.0), 5.0 + rng.normal(size=20)]))
    t = low_variance_select(m, k=1)
    assert t.kept_columns == ("c0",)


def test_low_variance_identity_when_k_all():
    rng = np.random.default_rng(13)
    m = matrix(rng.normal(10, 1, size=(15, 4)))
    t = low_variance_select(m, k=4)
    assert t.kept_columns == ("c0", "c1", "c2", "c3")


def test_low_variance_cov_ordering():
    # columns engineered with CoV 0.01 / 0.1 / 0.5 via alternating +-std
    cols = []
    for cov in (0.5, 0.01, 0.1):  # scrambled order on purpose
        mean = 100.0
        std = cov * mean
        cols.append(mean + std * np.tile([1.0, -1.0], 10))
    t = low_variance_select(matrix(np.column_stack(cols)), k=2)
    assert t.kept_columns == ("c1", "c2")


def test_low_variance_zero_mean_ranked_last():
    rng = np.random.default_rng(14)
    zero_mean = np.tile([1.0, -1.0], 10)
    noisy = 50 + rng.normal(size=20)
    t = low_variance_select(matrix(np.column_stack([zero_mean, noisy])), k=1)
    assert t.kept_columns == ("c1",)


def test_apply_dimension_and_identity():
    rng = np.random.default_rng(15)
    x = rng.normal(size=(12, 5))
    m = matrix(x)
    t = pca_fit(m, k=3)
    out = apply(t, m)
    assert out.values.shape == (12, 3)
    ident = correlation_filter(m, threshold=1.0)
    same = apply(ident, m)
    assert np.array_equal(same.values, x)
    assert same.column_names == m.column_names


def test_apply_pca_scores_match_fit():
    rng = np.random.default_rng(16)
    x = rng.normal(size=(20, 4))
    m = matrix(x)
    t = pca_fit(m, k=2)
    scores = apply(t, m).values
    z = (x - t.mean) / np.where(t.std == 0, 1.0, t.std)
    assert np.allclose(scores, z @ t.components.T, atol=1e-12)


def test_apply_column_mismatch_rejected():
    rng = np.random.default_rng(17)
    m = matrix(rng.normal(size=(10, 3)))
    t = correlation_filter(m)
    other = matrix(rng.normal(size=(5, 3)), columns=["x0", "x1", "x2"])
    with pytest.raises(ValueError):
        apply(t, other)


def test_fit_two_level_order_and_apply_all():
    rng = np.random.default_rng(18)
    f = rng.normal(size=30)
    x = np.column_stack([f, f * 3.0, rng.normal(size=30), rng.normal(size=30)])
    labels = [True] * 15 + [False] * 15
    m = labeled_matrix(x, labels)
    transforms = fit_two_level(m, "select_k_best", 2)
    assert transforms[0].kind == "correlation_filter"
    assert transforms[1].kind == "select_k_best"
    # the duplicated column is gone before the second level sees anything
    assert "c1" not in transforms[0].kept_columns
    out = apply_all(transforms, m)
    assert out.values.shape[1] == 2


def test_fitted_on_train_only():
    rng = np.random.default_rng(19)
    train = matrix(rng.normal(size=(30, 4)))
    for fit in (
        lambda m: correlation_filter(m),
        lambda m: pca_fit(m, 2),
        lambda m: low_variance_select(m, 2),
    ):
        t1 = fit(train)
        test = matrix(rng.normal(size=(10, 4)))
        test.values[:] = 1e9  # mutating test rows must not matter
        t2 = fit(train)
        assert transforms_to_json([t1]) == transforms_to_json([t2])


def test_transform_json_round_trip():
    rng = np.random.default_rng(20)
    m = matrix(rng.normal(size=(25, 5)))
    transforms = [correlation_filter(m), pca_fit(m, 3)]
    text = transforms_to_json(transforms)
    back = transforms_from_json(text)
    out1 = apply_all(transforms, m)
    out2 = apply_all(back, m)
    assert np.allclose(out1.values, out2.values, atol=0)
    assert json.loads(text)[1]["kind"] == "pca"
