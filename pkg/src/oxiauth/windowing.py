"""Heart-rate zone assignment and fixed 10-sample window segmentation.

Zones follow the standard five training bands (50-60%, 60-70%, 70-80%,
80-90%, 90-100% of an individual's maximum heart rate) plus a zone 0 for
anything below 50%. Windows are 40 s of contiguous data: 10 consecutive
samples at the nominal 4 s cadence, never spanning a recording gap.
"""

import csv
from collections import Counter
from dataclasses import dataclass

from .errors import InsufficientDataError, ValidationError
from .ingest import SampleSeries

WINDOW_SIZE = 10

# Nominal cadence 4 s; allow 50% jitter before declaring a gap.
GAP_TOLERANCE_S = 6.0

ZONES = (0, 1, 2, 3, 4, 5)


@dataclass(frozen=True)
class ZonedSample:
    timestamp: float
    spo2: float
    hr: float
    zone: int


@dataclass(frozen=True)
class Window:
    subject_id: str
    samples: tuple[ZonedSample, ...]
    rep_zone: int

    def hr_values(self):
        return [s.hr for s in self.samples]

    def spo2_values(self):
        return [s.spo2 for s in self.samples]


def assign_zone(hr: float, max_hr: float) -> int:
    """Map a heart rate to its zone given the subject's maximum heart rate.

    Half-open bands [lo, hi) with zone 5 closed at 100%; ratios above 100%
    clamp to zone 5. Total and deterministic for any max_hr > 0.
    """
    if max_hr <= 0:
        raise ValidationError(f"max_hr must be positive, got {max_hr}")
    r = hr / max_hr
    if r < 0.5:
        return 0
    if r < 0.6:
        return 1
    if r < 0.7:
        return 2
    if r < 0.8:
        return 3
    if r < 0.9:
        return 4
    return 5


def majority_zone(zones) -> int:
    """Most frequent zone of a full window; ties go to the lowest zone."""
    zones = list(zones)
    if len(zones) != WINDOW_SIZE:
        raise ValueError(f"expected exactly {WINDOW_SIZE} zones, got {len(zones)}")
    counts = Counter(zones)
    return min(counts, key=lambda z: (-counts[z], z))


def zone_series(series: SampleSeries, max_hr: float) -> list[ZonedSample]:
    """Attach a heart-rate zone to every sample of a cleaned series."""
    return [ZonedSample(s.timestamp, s.spo2, s.hr, assign_zone(s.hr, max_hr)) for s in series.samples]


def segment(series: SampleSeries, max_hr: float, gap_tolerance: float = GAP_TOLERANCE_S) -> list[Window]:
    """Greedy left-to-right grouping into disjoint 10-sample windows.

    Successive samples more than ``gap_tolerance`` seconds apart restart the
    current group (the sample after the gap opens a fresh group); a partial
    group at the end of the stream is discarded. Raises InsufficientDataError
    when no window can be formed.
    """
    zoned = zone_series(series, max_hr)
    windows: list[Window] = []
    group: list[ZonedSample] = []
    for s in zoned:
        if group and s.timestamp - group[-1].timestamp > gap_tolerance:
            group = []
        group.append(s)
        if len(group) == WINDOW_SIZE:
            rep = majority_zone([g.zone for g in group])
            windows.append(Window(series.subject_id, tuple(group), rep))
            group = []
    if not windows:
        raise InsufficientDataError(
            f"subject {series.subject_id!r}: no {WINDOW_SIZE}-sample window without gaps > {gap_tolerance}s"
        )
    return windows


def dump_windows_csv(windows, path) -> None:
    """Debug dump: one row per window with its span and representative zone."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject_id", "window_idx", "rep_zone", "t_start", "t_end"])
        for idx, w in enumerate(windows):
            writer.writerow([w.subject_id, idx, w.rep_zone, w.samples[0].timestamp, w.samples[-1].timestamp])
