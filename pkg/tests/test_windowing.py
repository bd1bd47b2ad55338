import numpy as np
import pytest

from oxiauth import windowing
from oxiauth.errors import InsufficientDataError
from oxiauth.ingest import RawSample, SampleSeries
from oxiauth.windowing import assign_zone, majority_zone, segment


def make_series(hr_values, dt=4.0, spo2=96.0):
    samples = tuple(RawSample(i * dt, spo2, float(h)) for i, h in enumerate(hr_values))
    return SampleSeries("s01", samples)


def test_assign_zone_table_cases():
    assert assign_zone(130, 200) == 2  # 65% of max
    assert assign_zone(95, 200) == 0  # 47.5%, below zone 1
    assert assign_zone(200, 200) == 5  # upper boundary closed
    assert assign_zone(240, 200) == 5  # clamped above 100%


def test_assign_zone_boundaries():
    assert assign_zone(100, 200) == 1  # exactly 50%
    assert assign_zone(120, 200) == 2  # exactly 60%
    assert assign_zone(140, 200) == 3
    assert assign_zone(160, 200) == 4
    assert assign_zone(180, 200) == 5


def test_assign_zone_monotone():
    rng = np.random.default_rng(1)
    for _ in range(200):
        max_hr = float(rng.uniform(150, 210))
        a, b = sorted(rng.uniform(20, 260, size=2))
        assert assign_zone(a, max_hr) <= assign_zone(b, max_hr)


def test_majority_zone_tie_goes_low():
    assert majority_zone([2, 2, 2, 2, 2, 3, 3, 3, 3, 3]) == 2


def test_majority_zone_strict_majority():
    assert majority_zone([1, 1, 1, 1, 1, 1, 1, 1, 1, 5]) == 1


def test_majority_zone_plurality():
    # counts 3/4/3 so zone 1 wins outright
    assert majority_zone([0, 0, 0, 1, 1, 1, 1, 2, 2, 2]) == 1


def test_majority_zone_needs_ten():
    with pytest.raises(ValueError):
        majority_zone([1, 2, 3])


def test_segment_floor_of_25():
    series = make_series([70.0] * 25)
    windows = segment(series, 200.0)
    assert len(windows) == 2
    assert windows[0].samples[0].timestamp == 0.0
    assert windows[1].samples[0].timestamp == 40.0


def test_segment_gap_restarts_grouping():
    samples = [RawSample(i * 4.0, 96.0, 70.0) for i in range(5)]
    samples += [RawSample(80.0 + i * 4.0, 96.0, 70.0) for i in range(5)]  # 60 s gap
    series = SampleSeries("s01", tuple(samples))
    with pytest.raises(InsufficientDataError):
        segment(series, 200.0)


def test_segment_rep_zone_from_table():
    series = make_series([130.0] * 10)  # 65% of 200
    windows = segment(series, 200.0)
    assert len(windows) == 1
    assert windows[0].rep_zone == 2


def test_segment_windows_disjoint_and_rep_zone_member():
    rng = np.random.default_rng(7)
    t = 0.0
    samples = []
    for _ in range(200):
        t += float(rng.choice([4.0, 4.0, 4.0, 30.0], p=[0.3, 0.3, 0.3, 0.1]))
        samples.append(RawSample(t, 96.0, float(rng.uniform(60, 200))))
    series = SampleSeries("s01", tuple(samples))
    try:
        windows = segment(series, 200.0)
    except InsufficientDataError:
        return
    seen = set()
    for w in windows:
        zones = [s.zone for s in w.samples]
        assert w.rep_zone in zones
        assert len(w.samples) == 10
        for s in w.samples:
            assert s.timestamp not in seen
            seen.add(s.timestamp)
        diffs = np.diff([s.timestamp for s in w.samples])
        assert (diffs <= windowing.GAP_TOLERANCE_S).all()


def test_dump_windows_csv(tmp_path):
    series = make_series([130.0] * 20)
    windows = segment(series, 200.0)
    out = tmp_path / "windows.csv"
    windowing.dump_windows_csv(windows, out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "subject_id,window_idx,rep_zone,t_start,t_end"
    assert len(lines) == 3
