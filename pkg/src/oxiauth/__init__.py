"""Wearable-user authentication from SpO2 and heart-rate streams.

The pipeline: ingest raw per-subject sensor CSVs, clean invalid samples,
segment into 40-second windows tagged with a majority-vote heart-rate zone,
extract 21 statistics per signal per window, check subject distinguishability
with zone-wise Welch t-tests, select features (correlation filter + PCA /
K-best / low-variance), train binary or one-class classifiers, and evaluate
with ACC/RMSE/GRR/GAR/F1/AUC-ROC plus the normalized radar-polygon area.
"""

from .classifiers import (
    ALGORITHMS,
    DEFAULT_GRIDS,
    PRESETS,
    ModelSpec,
    TrainedModel,
    grid_search,
    load_model,
    predict,
    save_model,
    score,
    train,
)
from .errors import InsufficientDataError, OxiAuthError, ParseError, ValidationError
from .evaluation import (
    Confusion,
    EvalReport,
    MetricSet,
    area,
    auc_roc,
    feature_count_sweep,
    metrics_from_confusion,
    relative_loss,
    run_experiment,
)
from .features import (
    MODALITIES,
    STAT_NAMES,
    FeatureMatrix,
    build_matrix,
    load_matrix_csv,
    save_matrix_csv,
    stat_features,
)
from .ingest import (
    RawSample,
    SampleSeries,
    SubjectRecord,
    clean,
    load_cohort,
    load_manifest,
    max_heart_rate,
    parse_subject_file,
)
from .selection import (
    FittedTransform,
    apply,
    apply_all,
    correlation_filter,
    fit_two_level,
    low_variance_select,
    pca_fit,
    select_k_best,
)
from .stats import (
    RejectionSummary,
    TTestResult,
    rejection_summary,
    student_t_cdf,
    welch_t_test,
)
from .synth import CohortSpec, generate_cohort, generate_cohort_data, separable_preset
from .windowing import Window, ZonedSample, assign_zone, majority_zone, segment, zone_series

__version__ = "0.1.0"
