"""Fuzzing core: domain types, toy targets, mutation, the loop, simulation."""

from .loop import choose, init_seed_corpus, is_interesting, run_fuzz_loop
from .mutate import (
    OPERATORS,
    delete_byte,
    flip_bit,
    insert_byte,
    mutate,
    replace_byte,
    truncate,
)
from .simulate import simulated_fuzzer, synthetic_label
from .targets import (
    VERSIONED_BUG_COUNT,
    VERSIONED_VERSION_COUNT,
    planted_bug_index,
    planted_fix_version,
    run_target,
    versioned_targets,
)
from .types import (
    DEFAULT_MAX_INPUT_SIZE,
    DEFAULT_SECONDS_PER_EXEC,
    EMPTY_SEED,
    CoverageProfile,
    CrashEvent,
    Edge,
    Frame,
    FuzzerConfig,
    Observation,
    QueueEntry,
    SeedConfig,
    StackTrace,
    StochasticProfile,
    TargetSpec,
    TrialRecord,
)

__all__ = [name for name in dir() if not name.startswith("_")]
