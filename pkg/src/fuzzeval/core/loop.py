"""The core greybox/blackbox fuzzing loop with pluggable pieces.

The loop runs on a virtual clock: every execution costs a fixed
``seconds_per_exec`` of virtual time, and the trial ends when the next
execution would pass the deadline (or when the execution budget runs out).
This makes a whole trial, including every crash timestamp, a pure function
of (target, config, rng_seed); wall time only appears in per-observation
durations, which are not retained in the trial record.

Seeds are enqueued first and each is evaluated once before mutation starts,
so accumulated coverage is always a superset of the seed corpus's coverage.
Every crashing execution is recorded as a crash event; de-duplication is a
downstream concern and never filters the record.
"""

from __future__ import annotations

import random
from pathlib import Path
from typing import Iterable, Sequence

from ..errors import ConfigError
from .mutate import mutate
from .targets import run_target
from .types import (
    CrashEvent,
    EMPTY_SEED,
    Edge,
    FuzzerConfig,
    Observation,
    QueueEntry,
    SeedConfig,
    TargetSpec,
    TrialRecord,
)


def init_seed_corpus(config: SeedConfig | None) -> list[bytes]:
    """Materialize the initial corpus. Always returns at least one seed."""
    if config is None:
        config = EMPTY_SEED
    if config.kind == "empty":
        return [b""]
    if config.kind == "literal":
        return [bytes(p) for p in config.payload]
    seeds = []
    for path in config.payload:
        try:
            seeds.append(Path(path).read_bytes())
        except OSError as exc:
            raise ConfigError(f"cannot read seed file {path!r}: {exc}") from exc
    return seeds


def is_interesting(obs: Observation, seen_edges: Iterable[Edge], mode: str) -> bool:
    """Decide whether an observation's input should be kept for mutation.

    Greybox keeps crashes and anything covering an edge outside the
    accumulated ``seen_edges`` union; blackbox keeps crashes only.
    """
    if obs.crashed:
        return True
    if mode == "blackbox":
        return False
    seen = seen_edges if isinstance(seen_edges, (set, frozenset)) else set(seen_edges)
    return not obs.edges <= seen


def choose(queue: Sequence[QueueEntry], step: int, schedule: str) -> int:
    """Pick the queue index to mutate next.

    round-robin cycles through the queue by call count; rarity picks the
    entry chosen fewest times so far, lowest index winning ties.
    """
    if not queue:
        raise ValueError("cannot choose from an empty queue")
    if schedule == "round-robin":
        return step % len(queue)
    return min(range(len(queue)), key=lambda i: (queue[i].times_chosen, i))


def run_fuzz_loop(target: TargetSpec, config: FuzzerConfig, deadline: float,
                  rng_seed: int, trial_index: int = 0) -> TrialRecord:
    """Run one fuzzing trial and return its complete record.

    Raises ConfigError if the budget allows zero executions (degenerate
    deadline or max_executions).
    """
    rng = random.Random(rng_seed)
    cost = config.seconds_per_exec
    budget = config.max_executions
    seeds = init_seed_corpus(config.seed)
    queue = [QueueEntry(input=s, parent=None, discovered_at=0.0) for s in seeds]

    crashes: list[CrashEvent] = []
    growth: list[tuple[float, int]] = []
    covered: set[Edge] = set()
    executions = 0

    def may_execute() -> bool:
        if budget is not None and executions >= budget:
            return False
        return (executions + 1) * cost <= deadline

    def evaluate(data: bytes) -> tuple[Observation, float]:
        nonlocal executions
        obs = run_target(target, data)
        executions += 1
        now = executions * cost
        if obs.crashed:
            crashes.append(CrashEvent(at=now, input=data, profile=obs.edges,
                                      trace=obs.trace))
        return obs, now

    def absorb(obs: Observation, now: float) -> None:
        # Measurement-side coverage accumulation; in greybox mode the same
        # union also feeds is_interesting, in blackbox mode it is ignored.
        new = obs.edges - covered
        if new:
            covered.update(new)
            growth.append((now, len(covered)))

    for entry in list(queue):
        if not may_execute():
            break
        obs, now = evaluate(entry.input)
        absorb(obs, now)

    step = 0
    while may_execute():
        idx = choose(queue, step, config.schedule)
        step += 1
        entry = queue[idx]
        entry.times_chosen += 1
        mutant = mutate(entry.input, rng, config.max_input_size)
        obs, now = evaluate(mutant)
        keep = is_interesting(obs, covered, config.mode)
        absorb(obs, now)
        if keep:
            queue.append(QueueEntry(input=mutant, parent=idx, discovered_at=now))

    if executions == 0:
        raise ConfigError(
            "trial performed zero executions; deadline or max_executions "
            "leaves no budget"
        )
    return TrialRecord(
        fuzzer_id=config.fuzzer_id,
        target_id=target.target_id,
        seed_config_id=(config.seed or EMPTY_SEED).id,
        trial_index=trial_index,
        rng_seed=rng_seed,
        deadline=deadline,
        crashes=tuple(crashes),
        coverage_growth=tuple(growth),
        executions=executions,
    )
