import math

import numpy as np
import pytest

from oxiauth import stats
from oxiauth.errors import InsufficientDataError
from oxiauth.stats import rejection_summary, student_t_cdf, welch_t_test
from oxiauth.windowing import ZonedSample

# Reference (t, dof, p) triplets computed once with an independent
# statistics package and frozen. p agreement is checked to 1e-8 absolute,
# far inside the 1e-4 the suite requires.
WELCH_CASES = [
    ([94.0, 95.0, 96.0, 97.0, 98.0], [90.0, 91.0, 92.0, 93.0, 94.0], 4.0, 8.0, 0.003949772803445322),
    ([95.0, 96.0, 97.0, 96.0], [95.0, 96.0, 97.0, 96.0], 0.0, 6.0, 1.0),
    ([103.315, 101.206, 97.721, 97.973, 97.172, 97.235, 100.244, 99.527, 101.802, 97.982, 101.388, 100.828, 100.539, 97.752, 100.062, 100.223, 101.592, 99.376, 99.222, 99.79], [103.652, 92.606, 96.344, 96.601, 104.995, 89.094, 99.536, 99.252, 96.164, 96.63, 98.331, 97.259, 98.891, 91.843, 92.101, 93.168, 95.453], 2.9511728429084294, 20.610406176935008, 0.007727253872242293),
    ([91.604, 99.734, 97.681, 94.124, 88.754, 88.57, 99.832, 96.701, 101.384, 93.103, 95.299, 94.112, 91.399, 96.295, 91.807, 93.001, 96.904, 92.699, 93.73, 87.935, 95.492], [92.602, 94.023, 95.581, 94.387, 91.549, 92.877, 93.435, 92.874, 92.565, 90.033], 1.3834649078242194, 28.7278056737025, 0.17717965322802884),
    ([98.235, 96.723, 98.355, 99.43, 100.209, 97.261, 94.114, 97.572, 98.843, 101.335, 101.053, 98.472, 98.283, 100.141, 99.926, 97.069, 100.148, 98.853, 97.901], [93.057, 83.842, 91.598, 88.489, 83.554], 5.29771014466276, 4.33272754587197, 0.004862269094150759),
    ([97.421, 97.323, 97.611, 97.178, 97.475], [93.507, 93.732, 94.3, 93.829, 93.488, 93.279, 95.109, 93.208, 92.184, 94.2, 94.178], 15.453837355518246, 11.856471154921586, 3.227989429841575e-09),
    ([97.02, 97.846, 96.509, 97.788, 97.736, 96.765, 96.732, 99.159, 96.76, 95.971, 98.781, 95.825, 98.242, 96.645, 96.485, 97.343], [97.001, 95.307, 91.59, 92.055, 94.614, 92.325, 91.595, 93.284, 91.862, 93.094, 94.043, 92.388, 92.925, 92.964, 89.306, 91.952, 94.318, 94.59, 94.35, 90.327, 93.921], 9.302918988718627, 32.25485086064042, 1.1934669375995464e-10),
    ([102.988, 90.826, 98.634, 96.082], [96.023, 96.153, 98.044, 97.987, 97.462, 99.156, 97.451, 101.084, 102.009, 99.453, 102.029, 94.97, 97.837, 93.932, 98.926, 97.407, 95.598, 99.281], -0.3513782512042133, 3.2707514541004565, 0.7467370362717611),
    ([94.654, 96.593, 99.996, 98.585, 97.23, 97.05, 94.172, 96.39, 101.936, 91.192, 92.561, 102.001, 93.811, 94.365, 94.686, 100.386, 90.931, 96.193, 91.447, 105.278, 95.161, 90.434, 101.619, 91.097, 93.134, 97.772, 95.548], [98.571, 96.902, 93.831, 99.664, 96.524, 93.398, 91.571, 90.847, 96.722, 92.667, 93.871, 95.38, 95.083, 97.849, 94.475, 95.492, 90.853, 98.353, 95.622, 94.445, 92.796, 96.181, 100.19, 89.013, 103.956, 92.835, 92.347, 94.161], 0.9845363400653427, 50.480660153281185, 0.3295473203461311),
    ([89.286, 92.04, 93.886], [93.874, 92.9, 93.016, 93.096, 95.204, 92.993, 92.523, 95.201, 93.232, 90.609, 92.945, 93.926, 93.973, 92.624, 91.754, 93.65, 95.035, 95.456, 93.1, 95.015, 92.35, 94.0], -1.2772130349600577, 2.153216342015454, 0.3219156617808036),
    ([93.517, 96.095, 94.4], [95.285, 93.415, 93.018, 94.935, 93.202, 94.656, 94.347, 95.466, 94.655, 95.918, 96.489, 94.791, 89.613, 96.723, 95.56, 93.241, 92.519, 95.604, 95.178, 95.855, 94.972, 94.3, 93.006, 94.332, 95.699, 93.105, 95.322, 94.095, 92.343], 0.3339019486800555, 2.5759041998412435, 0.7637460126583888),
    ([97.556, 99.236, 97.213, 98.852, 98.598, 97.101], [94.654, 97.909, 96.297, 99.624, 97.147], 1.0659474062720815, 5.614220943445531, 0.33012694024742356),
    ([93.583, 94.662, 88.667], [90.978, 91.128, 91.488, 90.571, 91.311, 90.718, 91.25, 91.075], 0.6704769281060814, 2.013650933655252, 0.5711990209448282),
    ([96.838, 101.981, 97.161, 96.593, 99.632, 98.032, 95.235, 98.763, 101.769], [97.631, 95.091, 94.335, 93.21, 93.555, 96.528, 94.109, 93.939, 95.198, 92.513, 96.07, 94.134, 96.552, 96.137, 91.565, 93.338, 95.954, 93.341, 96.234, 93.718, 92.406, 95.725, 92.566, 94.941, 92.876, 95.6, 95.829, 93.767], 4.72943834166467, 10.36442436348917, 0.0007296144339709002),
    ([93.977, 93.049, 92.788, 93.542, 92.84, 92.919, 93.236, 93.426, 93.349, 93.343, 93.166], [97.967, 94.322, 93.919, 98.859, 92.357, 97.114], -2.3755652246656864, 5.098445976623945, 0.06253080418569203),
    ([99.623, 100.02, 100.211, 100.047, 100.074, 99.924, 100.012, 100.153, 99.84, 99.912, 100.08, 99.836, 100.054], [96.776, 99.233, 96.99, 97.87, 98.206, 97.076, 97.244, 96.237, 98.07, 97.953, 98.261, 98.018, 97.266, 97.212, 98.484, 96.862, 97.19, 98.026, 97.706, 98.053, 98.147, 97.758, 98.219, 97.925, 97.596, 97.14, 97.857, 97.002], 18.24978945106174, 33.178151522712255, 7.191291704229016e-19),
    ([96.751, 101.097, 93.233, 95.067, 100.953, 99.362, 97.232, 99.963, 103.344, 103.566, 94.145, 91.655, 93.248, 102.824, 94.493, 98.092, 102.691, 93.752, 93.805, 103.153], [96.048, 95.78, 93.047, 94.397, 92.952, 97.963, 96.296, 94.383, 98.555, 93.731, 100.576, 96.127, 97.265, 99.066, 97.397, 92.3, 94.166, 96.599, 93.631, 94.936, 93.293, 94.91, 94.099, 95.379, 96.677, 97.175, 93.158], 2.381567629138788, 26.442402174441987, 0.024712322007762143),
    ([92.275, 91.119, 91.629, 90.366, 90.682, 90.397, 90.496], [95.864, 98.897, 95.436, 105.118, 98.879, 101.602, 101.703, 99.454, 103.332, 97.076, 100.341, 102.087, 100.051, 98.939, 104.499, 97.082, 104.059, 99.376, 99.204, 98.326, 96.08, 97.397, 103.16, 98.062, 91.927], -12.323316390903143, 29.658595775023166, 3.3954689939060925e-13),
    ([96.915, 98.057, 98.617, 97.247, 99.696, 97.497, 94.81, 97.806, 96.417, 98.276, 99.044, 101.666, 96.98, 101.412, 95.071, 99.865, 101.055, 98.713], [89.047, 90.15, 93.606, 90.465, 90.071, 90.333, 90.761, 89.679, 91.927, 91.541, 89.308, 88.743, 87.1, 90.606, 91.602, 90.323, 89.227, 89.878, 88.592, 85.955, 90.873, 92.538, 88.349, 90.464, 90.992, 95.051, 91.06, 89.543], 13.880571930329593, 34.31464094525517, 1.220785755374291e-15),
    ([101.202, 94.797, 99.673, 95.81, 94.878, 95.352, 94.286, 97.816, 99.208, 99.091, 94.799, 97.898, 98.443, 93.758, 92.229, 93.965], [90.308, 89.636, 88.078, 93.147, 88.25, 91.14, 86.162, 88.728, 88.377, 89.989, 90.451, 87.958, 90.136, 90.693, 89.38, 90.783, 90.347, 90.855, 90.74, 90.453, 89.402, 91.224, 88.959, 92.209, 91.314, 91.896, 91.512], 8.9574504297556, 21.199877652262792, 1.1838283066849065e-08),
]


def test_welch_reference_cases():
    for a, b, t_ref, dof_ref, p_ref in WELCH_CASES:
        r = welch_t_test(a, b)
        assert r.t_stat == pytest.approx(t_ref, rel=1e-10)
        assert r.dof == pytest.approx(dof_ref, rel=1e-10)
        assert r.p_value == pytest.approx(p_ref, abs=1e-8)
        assert r.reject == (p_ref < 0.05)


def test_identical_groups():
    r = welch_t_test([95, 96, 97, 96], [95, 96, 97, 96])
    assert r.t_stat == 0.0
    assert r.p_value == 1.0
    assert not r.reject


def test_degenerate_zero_variance():
    r = welch_t_test([1, 1, 1], [2, 2, 2])
    assert r.p_value == 0.0
    assert r.reject
    same = welch_t_test([3, 3, 3], [3, 3])
    assert same.p_value == 1.0
    assert not same.reject


def test_group_size_precondition():
    with pytest.raises(ValueError):
        welch_t_test([1.0], [2.0, 3.0])


def test_symmetry():
    rng = np.random.default_rng(11)
    for _ in range(50):
        a = rng.normal(95, 2, size=int(rng.integers(2, 20))).tolist()
        b = rng.normal(94, 3, size=int(rng.integers(2, 20))).tolist()
        r1 = welch_t_test(a, b)
        r2 = welch_t_test(b, a)
        assert r1.t_stat == pytest.approx(-r2.t_stat, rel=1e-12, abs=1e-12)
        assert r1.p_value == pytest.approx(r2.p_value, rel=1e-12, abs=1e-15)


def test_p_monotone_in_mean_gap():
    base_a = [94.0, 95.0, 96.0, 97.0]
    b = [93.0, 94.0, 95.0, 96.0]
    last_p = None
    for gap in (0.0, 0.5, 1.0, 2.0, 4.0):
        a = [v + gap for v in base_a]
        p = welch_t_test(a, b).p_value
        if last_p is not None:
            assert p <= last_p + 1e-15
        last_p = p


def t_density(x, dof):
    return (
        math.exp(math.lgamma((dof + 1) / 2) - math.lgamma(dof / 2))
        / math.sqrt(dof * math.pi)
        * (1 + x * x / dof) ** (-(dof + 1) / 2)
    )


def test_cdf_matches_numerical_integration():
    # brute force: CDF(t) = 1/2 + sign(t) * Simpson(density, 0, |t|), which
    # sidesteps the heavy lower tail at small dof
    for dof in (1.0, 2.0, 4.5, 8.0, 20.0, 60.0):
        for t in (-3.0, -1.0, -0.2, 0.0, 0.4, 1.0, 2.5, 5.0):
            grid = np.linspace(0.0, abs(t), 20001)
            dens = np.array([t_density(v, dof) for v in grid])
            h = (grid[-1] - grid[0]) / (len(grid) - 1) if len(grid) > 1 else 0.0
            simpson = h / 3.0 * (dens[0] + dens[-1] + 4 * dens[1:-1:2].sum() + 2 * dens[2:-1:2].sum())
            expected = 0.5 + math.copysign(simpson, t)
            assert student_t_cdf(t, dof) == pytest.approx(expected, abs=1e-6)


def zoned(values, zone=0):
    return [ZonedSample(4.0 * i, float(v), 70.0, zone) for i, v in enumerate(values)]


def test_rejection_identical_distributions():
    series = {"a": zoned([95, 96, 97, 96, 95, 96]), "b": zoned([95, 96, 97, 96, 95, 96])}
    summary = rejection_summary(series, "pairwise")
    assert summary.overall == 0.0
    assert summary.per_zone == {0: 0.0}


def test_rejection_one_vs_rest_self_pool():
    # one subject identical to the pooled rest: no rejection expected for it
    series = {
        "a": zoned([95, 96, 97, 96, 95, 96]),
        "b": zoned([95, 96, 97, 96, 95, 96]),
        "c": zoned([95, 96, 97, 96, 95, 96]),
    }
    summary = rejection_summary(series, "one_vs_rest")
    assert summary.overall == 0.0


def test_rejection_separated_baselines():
    rng = np.random.default_rng(2)
    series = {}
    for i, base in enumerate([92.0, 94.0, 96.0]):  # 3 sigma apart at sigma=0.67
        vals = rng.normal(base, 0.5, size=200)
        series[f"s{i}"] = zoned(vals)
    summary = rejection_summary(series, "pairwise")
    assert summary.overall >= 0.9


def test_rejection_zone_skipping():
    # zone 1 has a single sample for b: comparison skipped, zone excluded
    series = {
        "a": zoned([95, 96, 95, 96], zone=0) + zoned([90, 91, 90], zone=1),
        "b": zoned([99, 98, 99, 98], zone=0) + zoned([91], zone=1),
    }
    summary = rejection_summary(series, "pairwise")
    assert set(summary.per_zone) == {0}
    assert summary.comparisons == 1


def test_rejection_requires_two_subjects():
    with pytest.raises(InsufficientDataError):
        rejection_summary({"a": zoned([95, 96])}, "pairwise")


def test_rejection_no_feasible_comparison():
    series = {"a": zoned([95]), "b": zoned([96])}
    with pytest.raises(InsufficientDataError):
        rejection_summary(series, "pairwise")


def test_summary_json_shape():
    series = {"a": zoned([95, 96, 97, 96]), "b": zoned([99, 98, 99, 98])}
    summary = rejection_summary(series, "pairwise")
    import json

    payload = json.loads(stats.summary_to_json(summary))
    assert payload["mode"] == "pairwise"
    assert payload["alpha"] == 0.05
    assert "0" in payload["per_zone"]
    assert 0.0 <= payload["overall"] <= 1.0
