"""Synthetic multi-subject SpO2/HR cohorts with controllable separability.

Each subject is an order-1 autoregressive process around a personal baseline
pair, modulated by an activity profile: activity bouts push heart rate up
through the zone bands toward the subject's age-predicted maximum and depress
oxygen saturation slightly. ``noise_sigma_*`` is the stationary standard
deviation of the AR fluctuation, so "baselines spaced 3 sigma apart" means
what it says. Values are clipped to the ingest validity bounds, and a
configurable fraction of samples loses one or both cells so the cleaning
stage has something to do. Generation is deterministic per seed, with
per-subject substreams, so cohorts are reproducible byte-for-byte.
"""

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .ingest import (
    HR_BOUNDS,
    SPO2_BOUNDS,
    RawSample,
    SubjectRecord,
    save_manifest,
    write_subject_csv,
)

SAMPLE_PERIOD_S = 4.0

ACTIVITY_PROFILES = ("sedentary", "mixed", "active")

# activity bouts last ~5 minutes at the 4 s cadence
BOUT_LENGTH_SAMPLES = 75

# full-intensity activity depresses SpO2 by this many percentage points
ACTIVITY_SPO2_DROP = 1.0

# minimum believable sensor noise; the separable grid errors below this
MIN_SIGMA_SPO2 = 0.05
MIN_SIGMA_HR = 0.25


@dataclass(frozen=True)
class CohortSpec:
    n_subjects: int
    duration_s: float
    seed: int
    spo2_baseline_range: tuple[float, float] = (92.0, 98.0)
    hr_baseline_range: tuple[float, float] = (55.0, 95.0)
    noise_sigma_spo2: float = 0.4
    noise_sigma_hr: float = 2.0
    ar_coefficient: float = 0.6
    activity_profile: str = "mixed"
    dropout_rate: float = 0.0
    # explicit per-subject baselines override the uniform draw from the range
    spo2_baselines: tuple[float, ...] | None = None
    hr_baselines: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n_subjects < 1:
            raise ValidationError("n_subjects must be >= 1")
        if self.duration_s < SAMPLE_PERIOD_S:
            raise ValidationError("duration_s must cover at least one sample")
        lo, hi = self.spo2_baseline_range
        if not (90.0 <= lo <= hi <= 99.0):
            raise ValidationError("spo2_baseline_range must be a non-empty subrange of [90, 99]")
        lo, hi = self.hr_baseline_range
        if not (HR_BOUNDS[0] <= lo <= hi <= HR_BOUNDS[1]):
            raise ValidationError("hr_baseline_range must be a non-empty subrange of the validity bounds")
        if self.noise_sigma_spo2 <= 0 or self.noise_sigma_hr <= 0:
            raise ValidationError("noise sigmas must be positive")
        if not (0.0 <= self.ar_coefficient < 1.0):
            raise ValidationError("ar_coefficient must be in [0, 1)")
        if self.activity_profile not in ACTIVITY_PROFILES:
            raise ValidationError(f"activity_profile must be one of {ACTIVITY_PROFILES}")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ValidationError("dropout_rate must be in [0, 1)")
        for baselines in (self.spo2_baselines, self.hr_baselines):
            if baselines is not None and len(baselines) != self.n_subjects:
                raise ValidationError("explicit baselines must list one value per subject")


def _activity_bounds(profile: str) -> tuple[float, float]:
    # sedentary models a resting/sleep recording: HR stays near baseline
    if profile == "sedentary":
        return 0.0, 0.02
    if profile == "mixed":
        return 0.0, 0.75
    return 0.3, 1.0


def _activity_levels(n_samples: int, profile: str, rng) -> np.ndarray:
    lo, hi = _activity_bounds(profile)
    n_bouts = int(math.ceil(n_samples / BOUT_LENGTH_SAMPLES))
    levels = rng.uniform(lo, hi, size=n_bouts)
    return np.repeat(levels, BOUT_LENGTH_SAMPLES)[:n_samples]


def _ar1(targets: np.ndarray, sigma: float, ar: float, rng) -> np.ndarray:
    """AR(1) around a moving target with stationary standard deviation sigma."""
    innovation_sd = sigma * math.sqrt(1.0 - ar * ar)
    out = np.empty_like(targets)
    deviation = rng.normal(0.0, sigma)
    out[0] = targets[0] + deviation
    for t in range(1, len(targets)):
        deviation = ar * deviation + rng.normal(0.0, innovation_sd)
        out[t] = targets[t] + deviation
    return out


def generate_subject_samples(
    spec: CohortSpec,
    subject_index: int,
    spo2_baseline: float,
    hr_baseline: float,
    max_hr: float,
) -> list[RawSample]:
    rng = np.random.default_rng([spec.seed, subject_index])
    n_samples = int(spec.duration_s // SAMPLE_PERIOD_S)
    activity = _activity_levels(n_samples, spec.activity_profile, rng)

    hr_targets = hr_baseline + activity * (0.95 * max_hr - hr_baseline)
    spo2_targets = spo2_baseline - ACTIVITY_SPO2_DROP * activity
    hr = np.clip(_ar1(hr_targets, spec.noise_sigma_hr, spec.ar_coefficient, rng), *HR_BOUNDS)
    spo2 = np.clip(_ar1(spo2_targets, spec.noise_sigma_spo2, spec.ar_coefficient, rng), *SPO2_BOUNDS)

    samples = []
    for t in range(n_samples):
        spo2_v: float | None = float(spo2[t])
        hr_v: float | None = float(hr[t])
        if spec.dropout_rate > 0.0 and rng.random() < spec.dropout_rate:
            # a dropped sample loses SpO2, HR, or both
            which = rng.integers(0, 3)
            if which in (0, 2):
                spo2_v = None
            if which in (1, 2):
                hr_v = None
        samples.append(RawSample(t * SAMPLE_PERIOD_S, spo2_v, hr_v))
    return samples


def generate_cohort_data(spec: CohortSpec) -> tuple[list[SubjectRecord], dict[str, list[RawSample]]]:
    """Deterministically generate all subjects' raw samples in memory."""
    width = max(2, len(str(spec.n_subjects)))
    cohort_rng = np.random.default_rng([spec.seed, spec.n_subjects, 0])
    ages = cohort_rng.integers(20, 60, size=spec.n_subjects)
    if spec.spo2_baselines is not None:
        spo2_baselines = list(spec.spo2_baselines)
    else:
        spo2_baselines = cohort_rng.uniform(*spec.spo2_baseline_range, size=spec.n_subjects).tolist()
    if spec.hr_baselines is not None:
        hr_baselines = list(spec.hr_baselines)
    else:
        hr_baselines = cohort_rng.uniform(*spec.hr_baseline_range, size=spec.n_subjects).tolist()

    records = []
    data = {}
    for i in range(spec.n_subjects):
        sid = f"s{i + 1:0{width}d}"
        record = SubjectRecord(subject_id=sid, age=int(ages[i]))
        records.append(record)
        data[sid] = generate_subject_samples(
            spec, i, spo2_baselines[i], hr_baselines[i], 220.0 - float(ages[i])
        )
    return records, data


def generate_cohort(spec: CohortSpec, out_dir) -> list[Path]:
    """Write one CSV per subject plus the manifest; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records, data = generate_cohort_data(spec)
    paths = []
    for record in records:
        path = out_dir / f"{record.subject_id}.csv"
        write_subject_csv(path, data[record.subject_id])
        paths.append(path)
    manifest = out_dir / "manifest.json"
    save_manifest(records, manifest)
    paths.append(manifest)
    return paths


def separable_preset(n_subjects: int, seed: int, duration_s: float = 1800.0) -> CohortSpec:
    """Cohort spec whose subject baselines sit on an even grid >= 3 sigma apart.

    SpO2 baselines ascend the grid in subject order while HR baselines take a
    seeded permutation of their own grid, so the two signals carry
    complementary identity information. Noise sigmas are grid_spacing / 3;
    if that would drop below a believable sensor-noise floor the grid is too
    dense and a ValidationError is raised.
    """
    if n_subjects < 2:
        raise ValidationError("separable preset needs >= 2 subjects")
    spo2_range = (90.0, 99.0)
    hr_range = (55.0, 95.0)
    spacing_spo2 = (spo2_range[1] - spo2_range[0]) / (n_subjects - 1)
    spacing_hr = (hr_range[1] - hr_range[0]) / (n_subjects - 1)
    sigma_spo2 = spacing_spo2 / 3.0
    sigma_hr = spacing_hr / 3.0
    if sigma_spo2 < MIN_SIGMA_SPO2 or sigma_hr < MIN_SIGMA_HR:
        raise ValidationError(
            f"{n_subjects} subjects pack the baseline grid tighter than 3x the minimum noise sigma"
        )
    spo2_grid = np.linspace(*spo2_range, n_subjects)
    hr_grid = np.linspace(*hr_range, n_subjects)
    perm = np.random.default_rng([seed, n_subjects, 1]).permutation(n_subjects)
    # sedentary keeps within-subject activity drift small next to the grid
    # spacing, which is what makes the cohort separable for classifiers too
    return CohortSpec(
        n_subjects=n_subjects,
        duration_s=duration_s,
        seed=seed,
        spo2_baseline_range=spo2_range,
        hr_baseline_range=hr_range,
        noise_sigma_spo2=sigma_spo2,
        noise_sigma_hr=sigma_hr,
        ar_coefficient=0.6,
        activity_profile="sedentary",
        dropout_rate=0.01,
        spo2_baselines=tuple(float(v) for v in spo2_grid),
        hr_baselines=tuple(float(hr_grid[p]) for p in perm),
    )


def scaled_preset(preset: CohortSpec, duration_s: float) -> CohortSpec:
    """Same cohort at a different recording length."""
    return replace(preset, duration_s=duration_s)
