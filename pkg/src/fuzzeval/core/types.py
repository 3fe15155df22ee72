"""Domain types shared by the fuzzing loop, campaigns, triage and reporting.

All record types are immutable after construction and safe to pass between
threads or worker processes. Validation happens at construction time so a
``TrialRecord`` in hand is always internally consistent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ConfigError

# An edge is an ordered pair of basic-block identifiers executed in sequence.
Edge = tuple[int, int]
# One execution's edge set. Plain frozenset: profile equality is set equality.
CoverageProfile = frozenset[Edge]
# A normalized source location: (unit name, line number). No raw addresses.
Frame = tuple[str, int]
# Innermost frame first.
StackTrace = tuple[Frame, ...]

MODES = ("greybox", "blackbox")
SCHEDULES = ("round-robin", "rarity")
TARGET_FAMILIES = (
    "branchy-crash",
    "shared-crash-paths",
    "versioned-family",
    "external-subprocess",
)
SEED_KINDS = ("empty", "literal", "files")
STOCHASTIC_KINDS = ("deterministic-schedule", "poisson")

DEFAULT_MAX_INPUT_SIZE = 4096
# Virtual seconds charged per execution; see loop.run_fuzz_loop.
DEFAULT_SECONDS_PER_EXEC = 1e-4


@dataclass(frozen=True)
class Observation:
    """What one execution of a target revealed.

    ``duration_us`` is measured wall time and is the only non-deterministic
    field; everything else is a pure function of (target, input).
    """

    crashed: bool
    edges: CoverageProfile
    trace: StackTrace | None
    duration_us: int

    def __post_init__(self):
        if not self.crashed and self.trace is not None:
            raise ValueError("non-crashing observation must not carry a stack trace")
        if self.crashed and not self.trace:
            raise ValueError("crashing observation requires a non-empty stack trace")


@dataclass
class QueueEntry:
    """A retained input awaiting further mutation."""

    input: bytes
    parent: int | None
    discovered_at: float
    times_chosen: int = 0


@dataclass(frozen=True)
class CrashEvent:
    """One crash discovery inside a trial, at virtual time ``at`` seconds."""

    at: float
    input: bytes
    profile: CoverageProfile
    trace: StackTrace

    def __post_init__(self):
        if self.at < 0:
            raise ValueError("crash time must be >= 0")
        if not self.trace:
            raise ValueError("crash event requires a non-empty stack trace")


@dataclass(frozen=True)
class TrialRecord:
    """Full output of one fuzzing trial.

    ``coverage_growth`` holds (time, cumulative distinct edge count) points,
    one per growth step: strictly increasing counts, non-decreasing times.
    """

    fuzzer_id: str
    target_id: str
    seed_config_id: str
    trial_index: int
    rng_seed: int
    deadline: float
    crashes: tuple[CrashEvent, ...]
    coverage_growth: tuple[tuple[float, int], ...]
    executions: int

    def __post_init__(self):
        if self.deadline <= 0:
            raise ValueError("deadline must be > 0")
        prev = 0.0
        for ev in self.crashes:
            if ev.at < prev:
                raise ValueError("crash events must be sorted by time")
            if ev.at > self.deadline:
                raise ValueError("crash time exceeds trial deadline")
            prev = ev.at
        last_t, last_n = -1.0, 0
        for t, n in self.coverage_growth:
            if t < last_t:
                raise ValueError("coverage growth times must be non-decreasing")
            if n <= last_n:
                raise ValueError("coverage growth counts must be strictly increasing")
            last_t, last_n = t, n
        if self.executions < 0:
            raise ValueError("executions must be >= 0")


@dataclass(frozen=True)
class TargetSpec:
    """Names a target program to fuzz.

    ``version`` selects a build of the versioned toy family; ``path`` points
    at an executable for external subprocess targets. Exactly the matching
    field must be set for those families.
    """

    family: str
    version: int | None = None
    path: str | None = None

    def __post_init__(self):
        if self.family not in TARGET_FAMILIES:
            raise ConfigError(f"unknown target family: {self.family!r}")
        if (self.version is not None) != (self.family == "versioned-family"):
            raise ConfigError("version must be set exactly for versioned-family targets")
        if self.version is not None and self.version < 0:
            raise ConfigError("version index must be >= 0")
        if (self.path is not None) != (self.family == "external-subprocess"):
            raise ConfigError("path must be set exactly for external-subprocess targets")

    @property
    def target_id(self) -> str:
        if self.family == "versioned-family":
            return f"versioned-family-v{self.version}"
        if self.family == "external-subprocess":
            return f"external-subprocess:{self.path}"
        return self.family


@dataclass(frozen=True)
class SeedConfig:
    """Where the initial corpus comes from.

    kind "empty" yields exactly one zero-length input, "literal" passes the
    payload byte strings through in order, "files" reads the payload paths.
    """

    id: str
    kind: str
    payload: tuple = ()

    def __post_init__(self):
        if self.kind not in SEED_KINDS:
            raise ConfigError(f"unknown seed kind: {self.kind!r}")
        if self.kind == "empty" and self.payload:
            raise ConfigError("empty seed config carries no payload")
        if self.kind == "literal" and not all(isinstance(p, bytes) for p in self.payload):
            raise ConfigError("literal seed payload must be byte strings")
        if self.kind == "files" and not all(isinstance(p, str) for p in self.payload):
            raise ConfigError("files seed payload must be path strings")
        if self.kind != "empty" and not self.payload:
            raise ConfigError(f"seed config {self.id!r} has an empty payload")


EMPTY_SEED = SeedConfig(id="empty", kind="empty")


@dataclass(frozen=True)
class FuzzerConfig:
    """Configuration of one fuzzer: observation mode, schedule, seeds, budget.

    The loop charges ``seconds_per_exec`` of virtual time per execution, so a
    trial is a pure function of (target, config, rng_seed) and reruns are
    byte-identical. ``max_executions`` optionally caps the budget below what
    the deadline allows.
    """

    fuzzer_id: str
    mode: str = "greybox"
    schedule: str = "round-robin"
    seed: SeedConfig | None = None
    max_executions: int | None = None
    max_input_size: int = DEFAULT_MAX_INPUT_SIZE
    seconds_per_exec: float = DEFAULT_SECONDS_PER_EXEC

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode: {self.mode!r}")
        if self.schedule not in SCHEDULES:
            raise ConfigError(f"unknown schedule: {self.schedule!r}")
        if self.max_executions is not None and self.max_executions < 0:
            raise ConfigError("max_executions must be >= 0")
        if self.max_input_size < 1:
            raise ConfigError("max_input_size must be >= 1")
        if self.seconds_per_exec <= 0:
            raise ConfigError("seconds_per_exec must be > 0")


@dataclass(frozen=True)
class StochasticProfile:
    """A simulated fuzzer: crash times from a fixed schedule or a Poisson
    process, each crash tagged with a synthetic bug label.

    ``label_distribution`` maps bug label to probability (must sum to 1);
    the label is encoded into the event's stack trace, coverage profile and
    input bytes so every dedup strategy sees the same synthetic ground truth.
    """

    kind: str
    schedule: tuple[float, ...] = ()
    rate: float = 0.0
    label_distribution: dict[str, float] = field(default_factory=lambda: {"bug-0": 1.0})

    def __post_init__(self):
        if self.kind not in STOCHASTIC_KINDS:
            raise ConfigError(f"unknown stochastic kind: {self.kind!r}")
        if self.kind == "poisson" and self.rate < 0:
            raise ConfigError("poisson rate must be >= 0")
        if self.kind == "deterministic-schedule":
            if any(t < 0 for t in self.schedule):
                raise ConfigError("schedule times must be >= 0")
            if list(self.schedule) != sorted(self.schedule):
                raise ConfigError("schedule times must be sorted")
        if not self.label_distribution:
            raise ConfigError("label distribution must not be empty")
        total = sum(self.label_distribution.values())
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"label probabilities sum to {total}, expected 1")
        if any(p < 0 for p in self.label_distribution.values()):
            raise ConfigError("label probabilities must be >= 0")
