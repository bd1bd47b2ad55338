"""Raw sensor-file ingestion: CSV parsing, validity cleaning, demographics.

Input format per subject is a CSV with header ``timestamp_s,spo2_pct,hr_bpm``,
one sample per row at a nominal 4 s cadence, with empty cells meaning the
sensor failed to record ("missing"). A cohort is described by a JSON manifest:
a list of ``{"subject_id": ..., "age": ..., "max_hr_override": ...?}`` records,
with one ``<subject_id>.csv`` file next to the manifest.
"""

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import InsufficientDataError, ParseError, ValidationError

CSV_HEADER = ["timestamp_s", "spo2_pct", "hr_bpm"]

# Physiologically conservative validity bounds; samples outside are dropped.
SPO2_BOUNDS = (70.0, 100.0)
HR_BOUNDS = (25.0, 250.0)

# Fewer valid samples than this and no analysis window can ever form.
MIN_VALID_SAMPLES = 10


@dataclass(frozen=True)
class RawSample:
    """One sensor reading; ``spo2``/``hr`` are None when the cell was empty."""

    timestamp: float
    spo2: float | None
    hr: float | None


@dataclass(frozen=True)
class SubjectRecord:
    subject_id: str
    age: int
    max_hr_override: float | None = None

    def __post_init__(self):
        if not (1 <= self.age <= 120):
            raise ValidationError(f"age {self.age} outside [1, 120] for subject {self.subject_id!r}")
        if self.max_hr_override is not None and not (100 <= self.max_hr_override <= 250):
            raise ValidationError(
                f"max_hr_override {self.max_hr_override} outside [100, 250] for subject {self.subject_id!r}"
            )


@dataclass(frozen=True)
class SampleSeries:
    """Cleaned per-subject stream: no missing values, all samples in bounds."""

    subject_id: str
    samples: tuple[RawSample, ...]

    def __len__(self):
        return len(self.samples)

    def timestamps(self):
        return [s.timestamp for s in self.samples]

    def spo2_values(self):
        return [s.spo2 for s in self.samples]

    def hr_values(self):
        return [s.hr for s in self.samples]


def _parse_cell(text: str, path, line_no: int, column: str) -> float | None:
    text = text.strip()
    if text == "":
        return None
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"non-numeric {column} value {text!r}", path, line_no) from None


def parse_subject_file(path, subject: SubjectRecord) -> list[RawSample]:
    """Parse one subject CSV into RawSamples, in file order.

    Raises ParseError (with the offending line number) on malformed rows and
    ValidationError when timestamps are not strictly increasing.
    """
    path = Path(path)
    if not path.exists():
        raise ParseError("file not found", path)
    samples: list[RawSample] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", path, 1) from None
        if [h.strip() for h in header] != CSV_HEADER:
            raise ParseError(f"expected header {','.join(CSV_HEADER)!r}, got {','.join(header)!r}", path, 1)
        prev_t = None
        for line_no, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise ParseError(f"expected 3 columns, got {len(row)}", path, line_no)
            t = _parse_cell(row[0], path, line_no, "timestamp_s")
            if t is None:
                raise ParseError("missing timestamp", path, line_no)
            if t < 0:
                raise ValidationError(f"negative timestamp {t} at {path}:{line_no}")
            if prev_t is not None and t <= prev_t:
                raise ValidationError(
                    f"timestamps must be strictly increasing ({prev_t} then {t} at {path}:{line_no})"
                )
            prev_t = t
            spo2 = _parse_cell(row[1], path, line_no, "spo2_pct")
            hr = _parse_cell(row[2], path, line_no, "hr_bpm")
            samples.append(RawSample(t, spo2, hr))
    return samples


def is_valid_sample(s: RawSample, spo2_bounds=SPO2_BOUNDS, hr_bounds=HR_BOUNDS) -> bool:
    if s.spo2 is None or s.hr is None:
        return False
    return spo2_bounds[0] <= s.spo2 <= spo2_bounds[1] and hr_bounds[0] <= s.hr <= hr_bounds[1]


def clean(
    subject_id: str,
    samples,
    spo2_bounds=SPO2_BOUNDS,
    hr_bounds=HR_BOUNDS,
    min_samples: int = MIN_VALID_SAMPLES,
) -> SampleSeries:
    """Drop invalid samples (missing cell or out-of-bounds value), keep order.

    Never reorders or fabricates values; raises InsufficientDataError when
    fewer than ``min_samples`` valid samples remain.
    """
    kept = tuple(s for s in samples if is_valid_sample(s, spo2_bounds, hr_bounds))
    if len(kept) < min_samples:
        raise InsufficientDataError(
            f"subject {subject_id!r}: only {len(kept)} valid samples remain (need >= {min_samples})"
        )
    return SampleSeries(subject_id, kept)


def max_heart_rate(subject: SubjectRecord) -> float:
    """Subject's maximum heart rate: explicit override, else 220 - age."""
    if subject.max_hr_override is not None:
        return float(subject.max_hr_override)
    return float(220 - subject.age)


def load_manifest(path) -> list[SubjectRecord]:
    """Read the cohort manifest (JSON array of subject records)."""
    path = Path(path)
    if not path.exists():
        raise ParseError("manifest not found", path)
    try:
        entries = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e}", path) from None
    if not isinstance(entries, list):
        raise ParseError("manifest must be a JSON array", path)
    records = []
    for entry in entries:
        try:
            records.append(
                SubjectRecord(
                    subject_id=str(entry["subject_id"]),
                    age=int(entry["age"]),
                    max_hr_override=entry.get("max_hr_override"),
                )
            )
        except (KeyError, TypeError) as e:
            raise ParseError(f"bad manifest entry {entry!r}: {e}", path) from None
    return records


def save_manifest(records, path) -> None:
    payload = []
    for r in records:
        entry = {"subject_id": r.subject_id, "age": r.age}
        if r.max_hr_override is not None:
            entry["max_hr_override"] = r.max_hr_override
        payload.append(entry)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_subject_csv(path, samples) -> None:
    """Write samples in the ingest CSV format (None cells become empty)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for s in samples:
            writer.writerow(
                [
                    _format_number(s.timestamp),
                    "" if s.spo2 is None else _format_number(s.spo2),
                    "" if s.hr is None else _format_number(s.hr),
                ]
            )


def _format_number(x: float) -> str:
    # integers render without a trailing .0 so synthetic files stay tidy
    if float(x) == int(x):
        return str(int(x))
    return repr(float(x))


def load_cohort(data_dir, spo2_bounds=SPO2_BOUNDS, hr_bounds=HR_BOUNDS):
    """Parse + clean every subject listed in ``data_dir/manifest.json``.

    Returns (records, series) where series maps subject_id -> SampleSeries.
    Subjects whose files clean down to too few samples raise; callers that
    want to skip instead should catch InsufficientDataError per subject.
    """
    data_dir = Path(data_dir)
    records = load_manifest(data_dir / "manifest.json")
    series = {}
    for rec in records:
        raw = parse_subject_file(data_dir / f"{rec.subject_id}.csv", rec)
        series[rec.subject_id] = clean(rec.subject_id, raw, spo2_bounds, hr_bounds)
    return records, series
