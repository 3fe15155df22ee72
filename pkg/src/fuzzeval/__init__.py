"""fuzzeval: an A/B fuzzer evaluation harness.

Reference greybox fuzzer with instrumented toy targets, reproducible
multi-trial campaigns, three crash de-duplication strategies scored
against ground truth, and nonparametric statistics for sound comparisons.
"""

from .campaign import (
    CampaignConfig,
    CampaignResult,
    ComparisonResult,
    SimulatedFuzzer,
    TrialKey,
    compare,
    crash_count_at,
    derive_trial_seed,
    load_campaign,
    metric_value,
    run_campaign,
    trial_from_json,
    trial_to_json,
)
from .core import (
    EMPTY_SEED,
    CoverageProfile,
    CrashEvent,
    FuzzerConfig,
    Observation,
    SeedConfig,
    StackTrace,
    StochasticProfile,
    TargetSpec,
    TrialRecord,
    choose,
    init_seed_corpus,
    is_interesting,
    mutate,
    run_fuzz_loop,
    run_target,
    simulated_fuzzer,
    synthetic_label,
    versioned_targets,
)
from .dedup import (
    BugLabel,
    DedupTable,
    cmin,
    coverage_unique_online,
    dedup_report,
    dedup_table_csv,
    stack_hash,
    triage_versions,
)
from .errors import (
    CampaignError,
    ConfigError,
    ExecutionError,
    FuzzEvalError,
    StrategyUnavailableError,
)
from .report import (
    PlotSeries,
    PlotSpec,
    emit_comparison_table,
    emit_svg_plot,
    emit_timeseries_csv,
    format_comparison_text,
)
from .stats import (
    Band,
    CrashTimeSeries,
    MedianCI,
    TestResult,
    aggregate_band,
    crash_auc,
    mann_whitney_u,
    median_ci,
    permutation_test_median,
    vargha_delaney_a12,
)

__version__ = "0.1.0"
__all__ = [name for name in dir() if not name.startswith("_")]
