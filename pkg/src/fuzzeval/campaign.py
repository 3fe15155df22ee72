"""Multi-trial campaign orchestration and A-vs-B statistical comparison.

A campaign runs two fuzzers (real loop configurations or simulated
stochastic profiles) across targets x seed configs x trials. Per-trial rng
seeds are derived by hashing (master_rng_seed, fuzzer, target, seed config,
trial index) with SHA-256 and taking the first 8 bytes, so results are
identical regardless of worker count or completion order.

Results persist as one JSON document per trial plus a campaign manifest;
byte sequences are base64-encoded and all times are decimal seconds.
"""

from __future__ import annotations

import base64
import concurrent.futures
import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .core.loop import run_fuzz_loop
from .core.simulate import simulated_fuzzer, synthetic_label
from .core.types import (
    CrashEvent,
    FuzzerConfig,
    SeedConfig,
    StochasticProfile,
    TargetSpec,
    TrialRecord,
)
from .dedup import coverage_unique_online, stack_hash
from .errors import CampaignError, ConfigError
from .stats import MedianCI, mann_whitney_u, median_ci

METRICS = ("raw", "cov-unique", "stackhash", "ground-truth-bugs")


@dataclass(frozen=True)
class SimulatedFuzzer:
    """A named stochastic crash profile standing in for a real fuzzer."""

    fuzzer_id: str
    profile: StochasticProfile


@dataclass(frozen=True)
class CampaignConfig:
    """Everything needed to reproduce a campaign bit-for-bit."""

    fuzzer_a: FuzzerConfig | SimulatedFuzzer
    fuzzer_b: FuzzerConfig | SimulatedFuzzer
    targets: tuple[TargetSpec, ...]
    seed_configs: tuple[SeedConfig, ...]
    trials: int = 30
    deadline: float = 60.0
    workers: int = 1
    master_rng_seed: int = 0
    checkpoints: tuple[float, ...] = ()

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.deadline <= 0:
            raise ConfigError("deadline must be > 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.targets:
            raise ConfigError("campaign needs at least one target")
        if not self.seed_configs:
            raise ConfigError("campaign needs at least one seed config")
        ids = [s.id for s in self.seed_configs]
        if len(set(ids)) != len(ids):
            raise ConfigError("seed config ids must be unique within a campaign")
        if self.fuzzer_a.fuzzer_id == self.fuzzer_b.fuzzer_id:
            raise ConfigError("the two fuzzers must have distinct ids")
        if not self.checkpoints:
            object.__setattr__(self, "checkpoints",
                               (self.deadline / 4, self.deadline / 2, self.deadline))
        cps = self.checkpoints
        if list(cps) != sorted(cps) or any(c <= 0 or c > self.deadline for c in cps):
            raise ConfigError("checkpoints must be sorted, > 0 and <= deadline")


@dataclass(frozen=True)
class TrialKey:
    fuzzer_id: str
    target_id: str
    seed_config_id: str
    trial_index: int


@dataclass
class CampaignResult:
    config: CampaignConfig
    records: dict[TrialKey, TrialRecord] = field(default_factory=dict)

    def cell(self, fuzzer_id: str, target_id: str, seed_config_id: str) -> list[TrialRecord]:
        keys = [k for k in self.records
                if (k.fuzzer_id, k.target_id, k.seed_config_id)
                == (fuzzer_id, target_id, seed_config_id)]
        return [self.records[k] for k in sorted(keys, key=lambda k: k.trial_index)]


def derive_trial_seed(master_rng_seed: int, fuzzer_id: str, target_id: str,
                      seed_config_id: str, trial_index: int) -> int:
    """Mix the campaign master seed with the trial coordinates into a u64.

    SHA-256 over the pipe-joined coordinates, first 8 bytes big-endian.
    Stable across platforms, worker counts and completion order.
    """
    text = f"{master_rng_seed}|{fuzzer_id}|{target_id}|{seed_config_id}|{trial_index}"
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def _run_one(fuzzer, target: TargetSpec, seed_config: SeedConfig,
             deadline: float, rng_seed: int, trial_index: int) -> TrialRecord:
    if isinstance(fuzzer, SimulatedFuzzer):
        return simulated_fuzzer(
            fuzzer.profile, deadline, rng_seed,
            fuzzer_id=fuzzer.fuzzer_id, target_id=target.target_id,
            seed_config_id=seed_config.id, trial_index=trial_index,
        )
    config = replace(fuzzer, seed=seed_config)
    return run_fuzz_loop(target, config, deadline, rng_seed, trial_index=trial_index)


def _task_args(config: CampaignConfig):
    for fuzzer in (config.fuzzer_a, config.fuzzer_b):
        for target in config.targets:
            for seed_config in config.seed_configs:
                for trial in range(config.trials):
                    rng_seed = derive_trial_seed(
                        config.master_rng_seed, fuzzer.fuzzer_id,
                        target.target_id, seed_config.id, trial)
                    yield (fuzzer, target, seed_config, config.deadline,
                           rng_seed, trial)


def run_campaign(config: CampaignConfig, out_dir: Path | str | None = None) -> CampaignResult:
    """Run every trial of a campaign, optionally persisting as it goes.

    Trials are dispatched to at most ``config.workers`` worker processes.
    The first failing trial aborts the campaign with its cell identified;
    trials already persisted stay on disk.
    """
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
    result = CampaignResult(config=config)
    tasks = list(_task_args(config))

    def record(args, trial: TrialRecord) -> None:
        fuzzer, target, seed_config, _, _, trial_index = args
        key = TrialKey(fuzzer.fuzzer_id, target.target_id, seed_config.id, trial_index)
        result.records[key] = trial
        if out_path is not None:
            (out_path / trial_filename(trial)).write_text(trial_to_json(trial))

    def fail(args, exc: Exception):
        fuzzer, target, seed_config, _, _, trial_index = args
        return CampaignError(
            f"trial failed in cell fuzzer={fuzzer.fuzzer_id} target={target.target_id} "
            f"seed={seed_config.id} trial={trial_index}: {exc}",
            fuzzer_id=fuzzer.fuzzer_id, target_id=target.target_id,
            seed_config_id=seed_config.id, trial_index=trial_index,
        )

    if config.workers == 1:
        for args in tasks:
            try:
                trial = _run_one(*args)
            except Exception as exc:
                raise fail(args, exc) from exc
            record(args, trial)
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = {pool.submit(_run_one, *args): args for args in tasks}
            failure = None
            for future in concurrent.futures.as_completed(futures):
                args = futures[future]
                try:
                    trial = future.result()
                except Exception as exc:
                    failure = (args, exc)
                    break
                record(args, trial)
            if failure is not None:
                args, exc = failure
                raise fail(args, exc) from exc

    if out_path is not None:
        write_manifest(out_path, config, result)
    return result


# --- persistence -----------------------------------------------------------

def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "-", name)


def trial_filename(trial: TrialRecord) -> str:
    return (f"trial__{_safe(trial.fuzzer_id)}__{_safe(trial.target_id)}"
            f"__{_safe(trial.seed_config_id)}__{trial.trial_index:04d}.json")


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def trial_to_json(trial: TrialRecord) -> str:
    doc = {
        "fuzzer_id": trial.fuzzer_id,
        "target_id": trial.target_id,
        "seed_config_id": trial.seed_config_id,
        "trial_index": trial.trial_index,
        "rng_seed": trial.rng_seed,
        "deadline": trial.deadline,
        "crashes": [
            {
                "at": ev.at,
                "input": _b64(ev.input),
                "profile": sorted(list(edge) for edge in ev.profile),
                "trace": [list(frame) for frame in ev.trace],
            }
            for ev in trial.crashes
        ],
        "coverage_growth": [list(point) for point in trial.coverage_growth],
        "executions": trial.executions,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def trial_from_json(text: str) -> TrialRecord:
    doc = json.loads(text)
    crashes = tuple(
        CrashEvent(
            at=ev["at"],
            input=base64.b64decode(ev["input"]),
            profile=frozenset(tuple(edge) for edge in ev["profile"]),
            trace=tuple((unit, line) for unit, line in ev["trace"]),
        )
        for ev in doc["crashes"]
    )
    return TrialRecord(
        fuzzer_id=doc["fuzzer_id"],
        target_id=doc["target_id"],
        seed_config_id=doc["seed_config_id"],
        trial_index=doc["trial_index"],
        rng_seed=doc["rng_seed"],
        deadline=doc["deadline"],
        crashes=crashes,
        coverage_growth=tuple((t, n) for t, n in doc["coverage_growth"]),
        executions=doc["executions"],
    )


def fuzzer_to_jsonable(fuzzer) -> dict:
    if isinstance(fuzzer, SimulatedFuzzer):
        prof = fuzzer.profile
        doc = {"fuzzer_id": fuzzer.fuzzer_id,
               "profile": {"kind": prof.kind,
                           "label_distribution": dict(sorted(prof.label_distribution.items()))}}
        if prof.kind == "poisson":
            doc["profile"]["rate"] = prof.rate
        else:
            doc["profile"]["schedule"] = list(prof.schedule)
        return doc
    doc = {"fuzzer_id": fuzzer.fuzzer_id, "mode": fuzzer.mode,
           "schedule": fuzzer.schedule, "max_input_size": fuzzer.max_input_size,
           "seconds_per_exec": fuzzer.seconds_per_exec}
    if fuzzer.max_executions is not None:
        doc["max_executions"] = fuzzer.max_executions
    if fuzzer.seed is not None:
        doc["seed"] = seed_config_to_jsonable(fuzzer.seed)
    return doc


def fuzzer_from_jsonable(doc: Mapping):
    if "profile" in doc:
        prof = doc["profile"]
        profile = StochasticProfile(
            kind=prof["kind"],
            schedule=tuple(prof.get("schedule", ())),
            rate=prof.get("rate", 0.0),
            label_distribution=dict(prof.get("label_distribution", {"bug-0": 1.0})),
        )
        return SimulatedFuzzer(fuzzer_id=doc["fuzzer_id"], profile=profile)
    return FuzzerConfig(
        fuzzer_id=doc["fuzzer_id"],
        mode=doc.get("mode", "greybox"),
        schedule=doc.get("schedule", "round-robin"),
        seed=seed_config_from_jsonable(doc["seed"]) if "seed" in doc else None,
        max_executions=doc.get("max_executions"),
        max_input_size=doc.get("max_input_size", 4096),
        seconds_per_exec=doc.get("seconds_per_exec", 1e-4),
    )


def seed_config_to_jsonable(seed: SeedConfig) -> dict:
    doc = {"id": seed.id, "kind": seed.kind}
    if seed.kind == "literal":
        doc["payload"] = [_b64(p) for p in seed.payload]
    elif seed.kind == "files":
        doc["payload"] = list(seed.payload)
    return doc


def seed_config_from_jsonable(doc: Mapping) -> SeedConfig:
    kind = doc["kind"]
    if kind == "literal":
        payload = tuple(base64.b64decode(p) for p in doc.get("payload", ()))
    elif kind == "files":
        payload = tuple(doc.get("payload", ()))
    else:
        payload = ()
    return SeedConfig(id=doc["id"], kind=kind, payload=payload)


def target_to_jsonable(target: TargetSpec) -> dict:
    doc = {"family": target.family}
    if target.version is not None:
        doc["version"] = target.version
    if target.path is not None:
        doc["path"] = target.path
    return doc


def target_from_jsonable(doc: Mapping) -> TargetSpec:
    return TargetSpec(family=doc["family"], version=doc.get("version"),
                      path=doc.get("path"))


def config_to_jsonable(config: CampaignConfig) -> dict:
    return {
        "fuzzer_a": fuzzer_to_jsonable(config.fuzzer_a),
        "fuzzer_b": fuzzer_to_jsonable(config.fuzzer_b),
        "targets": [target_to_jsonable(t) for t in config.targets],
        "seed_configs": [seed_config_to_jsonable(s) for s in config.seed_configs],
        "trials": config.trials,
        "deadline": config.deadline,
        "workers": config.workers,
        "master_rng_seed": config.master_rng_seed,
        "checkpoints": list(config.checkpoints),
    }


def config_from_jsonable(doc: Mapping) -> CampaignConfig:
    return CampaignConfig(
        fuzzer_a=fuzzer_from_jsonable(doc["fuzzer_a"]),
        fuzzer_b=fuzzer_from_jsonable(doc["fuzzer_b"]),
        targets=tuple(target_from_jsonable(t) for t in doc["targets"]),
        seed_configs=tuple(seed_config_from_jsonable(s) for s in doc["seed_configs"]),
        trials=doc.get("trials", 30),
        deadline=doc.get("deadline", 60.0),
        workers=doc.get("workers", 1),
        master_rng_seed=doc.get("master_rng_seed", 0),
        checkpoints=tuple(doc.get("checkpoints", ())),
    )


def write_manifest(out_path: Path, config: CampaignConfig, result: CampaignResult) -> None:
    files = sorted(trial_filename(tr) for tr in result.records.values())
    doc = {"config": config_to_jsonable(config), "trials": files}
    (out_path / "manifest.json").write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def load_campaign(out_dir: Path | str) -> CampaignResult:
    """Reload a persisted campaign from its manifest and trial files."""
    out_path = Path(out_dir)
    manifest = json.loads((out_path / "manifest.json").read_text())
    config = config_from_jsonable(manifest["config"])
    result = CampaignResult(config=config)
    for name in manifest["trials"]:
        trial = trial_from_json((out_path / name).read_text())
        key = TrialKey(trial.fuzzer_id, trial.target_id, trial.seed_config_id,
                       trial.trial_index)
        result.records[key] = trial
    return result


# --- metrics and comparison ------------------------------------------------

def crash_count_at(trial: TrialRecord, t: float) -> int:
    """Number of crash events at or before time t."""
    if not 0 <= t <= trial.deadline:
        raise ValueError(f"t={t} outside [0, deadline={trial.deadline}]")
    return sum(1 for ev in trial.crashes if ev.at <= t)


def metric_value(trial: TrialRecord, t: float, metric: str = "raw",
                 frames: int = 3,
                 labeler: Callable[[CrashEvent], str] | None = None) -> int:
    """Evaluate one per-trial performance metric at time t.

    raw counts every crash event; cov-unique counts events the online
    coverage rule flags unique; stackhash counts distinct stack hashes;
    ground-truth-bugs counts distinct bug labels (synthetic labels by
    default, or a custom ``labeler``).
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric: {metric!r}")
    if not 0 <= t <= trial.deadline:
        raise ValueError(f"t={t} outside [0, deadline={trial.deadline}]")
    events = [ev for ev in trial.crashes if ev.at <= t]
    if metric == "raw":
        return len(events)
    if metric == "cov-unique":
        # Flags are prefix-stable, so flagging the prefix up to t is the
        # same as flagging everything and counting the prefix.
        return sum(coverage_unique_online(events))
    if metric == "stackhash":
        return len({stack_hash(ev.trace, frames) for ev in events})
    get_label = labeler if labeler is not None else synthetic_label
    return len({get_label(ev) for ev in events})


@dataclass(frozen=True)
class ComparisonResult:
    """A-vs-B comparison of per-trial metric values at one time point."""

    median_a: float
    median_b: float
    u_statistic: float
    p_value: float
    a12: float
    ci_a: tuple[float, float]
    ci_b: tuple[float, float]
    at_time: float
    n_a: int
    n_b: int
    method: str


def compare(trials_a: Sequence[TrialRecord], trials_b: Sequence[TrialRecord],
            t: float, metric: str = "raw", level: float = 0.95,
            frames: int = 3,
            labeler: Callable[[CrashEvent], str] | None = None) -> ComparisonResult:
    """Compare two trial collections sharing a target and seed config."""
    if not trials_a or not trials_b:
        raise ValueError("both trial collections must be non-empty")
    cells = {(tr.target_id, tr.seed_config_id) for tr in (*trials_a, *trials_b)}
    if len(cells) != 1:
        raise ValueError(f"trial collections span multiple cells: {sorted(cells)}")
    values_a = [metric_value(tr, t, metric, frames, labeler) for tr in trials_a]
    values_b = [metric_value(tr, t, metric, frames, labeler) for tr in trials_b]
    test = mann_whitney_u(values_a, values_b)
    ci_a: MedianCI = median_ci(values_a, level)
    ci_b: MedianCI = median_ci(values_b, level)
    return ComparisonResult(
        median_a=ci_a.median, median_b=ci_b.median,
        u_statistic=test.u_statistic, p_value=test.p_value, a12=test.a12,
        ci_a=(ci_a.lo, ci_a.hi), ci_b=(ci_b.lo, ci_b.hi),
        at_time=t, n_a=len(values_a), n_b=len(values_b), method=test.method,
    )
