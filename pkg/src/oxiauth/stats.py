"""Zone-wise two-sample t-tests of mean SpO2 between subjects.

Welch's unequal-variance test, two-sided, with the Student-t tail probability
evaluated through the regularized incomplete beta function (continued-fraction
form), so the package carries no statistics dependency. Rejection rates are
aggregated one-vs-rest or pairwise across subjects per heart-rate zone.
"""

import json
import math
from dataclasses import dataclass

from .errors import InsufficientDataError
from .windowing import ZONES

DEFAULT_ALPHA = 0.05

_BETACF_MAX_ITER = 300
_BETACF_EPS = 3e-14
_FPMIN = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (Lentz's method)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    front = math.exp(ln_front)
    # use the side of the symmetry relation where the fraction converges fast
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_cdf(t: float, dof: float) -> float:
    """CDF of the Student-t distribution with ``dof`` degrees of freedom."""
    if dof <= 0:
        raise ValueError(f"dof must be positive, got {dof}")
    x = dof / (dof + t * t)
    tail = 0.5 * regularized_incomplete_beta(dof / 2.0, 0.5, x)
    return 1.0 - tail if t >= 0 else tail


def student_t_two_sided_p(t: float, dof: float) -> float:
    """Two-sided p-value P(|T| >= |t|)."""
    if dof <= 0:
        raise ValueError(f"dof must be positive, got {dof}")
    x = dof / (dof + t * t)
    return regularized_incomplete_beta(dof / 2.0, 0.5, x)


@dataclass(frozen=True)
class TTestResult:
    t_stat: float
    dof: float
    p_value: float
    reject: bool


def welch_t_test(a, b, alpha: float = DEFAULT_ALPHA) -> TTestResult:
    """Two-sided Welch t-test of mean equality between two samples.

    Uses sample (1/(n-1)) variances and the Welch-Satterthwaite degrees of
    freedom. When both variances are zero the test degenerates: equal means
    give p = 1, different means give p = 0 (certain rejection).
    """
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise ValueError(f"each group needs >= 2 samples (got {na} and {nb})")
    mean_a = sum(a) / na
    mean_b = sum(b) / nb
    var_a = sum((v - mean_a) ** 2 for v in a) / (na - 1)
    var_b = sum((v - mean_b) ** 2 for v in b) / (nb - 1)
    se2 = var_a / na + var_b / nb
    if se2 == 0.0:
        if mean_a == mean_b:
            return TTestResult(0.0, float(na + nb - 2), 1.0, False)
        t = math.inf if mean_a > mean_b else -math.inf
        return TTestResult(t, float(na + nb - 2), 0.0, 0.0 < alpha)
    t = (mean_a - mean_b) / math.sqrt(se2)
    dof = se2 * se2 / ((var_a / na) ** 2 / (na - 1) + (var_b / nb) ** 2 / (nb - 1))
    p = student_t_two_sided_p(t, dof)
    return TTestResult(t, dof, p, p < alpha)


@dataclass(frozen=True)
class RejectionSummary:
    mode: str
    alpha: float
    per_zone: dict[int, float]
    overall: float
    comparisons: int
    rejections: int


def _spo2_by_zone(zoned_samples) -> dict[int, list[float]]:
    by_zone: dict[int, list[float]] = {}
    for s in zoned_samples:
        by_zone.setdefault(s.zone, []).append(s.spo2)
    return by_zone


def rejection_summary(series_by_subject: dict, mode: str, alpha: float = DEFAULT_ALPHA) -> RejectionSummary:
    """Aggregate t-test rejection fractions per zone and overall.

    ``series_by_subject`` maps subject_id -> sequence of ZonedSample. In
    ``one_vs_rest`` mode each subject's SpO2 samples at a zone are tested
    against the pooled samples of everyone else at that zone; ``pairwise``
    tests every unordered subject pair. Comparisons where either side has
    fewer than 2 samples are skipped and excluded from the normalization.
    """
    if mode not in ("one_vs_rest", "pairwise"):
        raise ValueError(f"mode must be one_vs_rest or pairwise, got {mode!r}")
    subjects = sorted(series_by_subject)
    if len(subjects) < 2:
        raise InsufficientDataError("need at least two subjects to compare")
    zone_samples = {sid: _spo2_by_zone(series_by_subject[sid]) for sid in subjects}

    per_zone_counts: dict[int, list[int]] = {z: [0, 0] for z in ZONES}  # zone -> [rejections, comparisons]
    for zone in ZONES:
        if mode == "one_vs_rest":
            for sid in subjects:
                own = zone_samples[sid].get(zone, [])
                rest = [v for other in subjects if other != sid for v in zone_samples[other].get(zone, [])]
                if len(own) < 2 or len(rest) < 2:
                    continue
                result = welch_t_test(own, rest, alpha)
                per_zone_counts[zone][1] += 1
                per_zone_counts[zone][0] += int(result.reject)
        else:
            for i, sid_a in enumerate(subjects):
                for sid_b in subjects[i + 1:]:
                    a = zone_samples[sid_a].get(zone, [])
                    b = zone_samples[sid_b].get(zone, [])
                    if len(a) < 2 or len(b) < 2:
                        continue
                    result = welch_t_test(a, b, alpha)
                    per_zone_counts[zone][1] += 1
                    per_zone_counts[zone][0] += int(result.reject)

    total_rej = sum(c[0] for c in per_zone_counts.values())
    total_cmp = sum(c[1] for c in per_zone_counts.values())
    if total_cmp == 0:
        empty = sorted(z for z, c in per_zone_counts.items() if c[1] == 0)
        raise InsufficientDataError(f"no feasible comparison in any zone (zones lacking data: {empty})")
    per_zone = {z: c[0] / c[1] for z, c in per_zone_counts.items() if c[1] > 0}
    return RejectionSummary(
        mode=mode,
        alpha=alpha,
        per_zone=per_zone,
        overall=total_rej / total_cmp,
        comparisons=total_cmp,
        rejections=total_rej,
    )


def summary_to_json(summary: RejectionSummary) -> str:
    payload = {
        "mode": summary.mode,
        "alpha": summary.alpha,
        "per_zone": {str(z): summary.per_zone[z] for z in sorted(summary.per_zone)},
        "overall": summary.overall,
        "comparisons": summary.comparisons,
        "rejections": summary.rejections,
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def summary_to_csv_rows(summary: RejectionSummary) -> list[list]:
    """Rows for plotting a per-zone rejection bar chart."""
    rows = [["zone", "rejection_fraction"]]
    for z in sorted(summary.per_zone):
        rows.append([z, summary.per_zone[z]])
    rows.append(["overall", summary.overall])
    return rows
