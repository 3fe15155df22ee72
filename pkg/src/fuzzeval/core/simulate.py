"""Simulated stochastic fuzzers for exercising the statistics pipeline.

A simulated trial emits crash events either at fixed scheduled times or as
a homogeneous Poisson process. Every event draws a synthetic bug label and
encodes it consistently into the event's input bytes, stack trace and
coverage profile, so coverage dedup, stack hashing and ground-truth metrics
all agree on the planted identity.
"""

from __future__ import annotations

import hashlib
import random

from .types import CoverageProfile, CrashEvent, StackTrace, StochasticProfile, TrialRecord

_UNIT_PREFIX = "simulated:"


def _label_trace(label: str) -> StackTrace:
    unit = _UNIT_PREFIX + label
    return ((unit, 1), (unit, 2), (unit, 3))


def _label_profile(label: str) -> CoverageProfile:
    h = int.from_bytes(hashlib.sha256(label.encode()).digest()[:4], "big")
    return frozenset({(h, h + 1)})


def synthetic_label(event: CrashEvent) -> str:
    """Recover the planted bug label of a simulated crash event."""
    unit = event.trace[0][0]
    if not unit.startswith(_UNIT_PREFIX):
        raise ValueError("crash event does not carry a synthetic bug label")
    return unit[len(_UNIT_PREFIX):]


def simulated_fuzzer(profile: StochasticProfile, deadline: float, rng_seed: int,
                     *, fuzzer_id: str = "simulated", target_id: str = "simulated",
                     seed_config_id: str = "none", trial_index: int = 0) -> TrialRecord:
    """Produce a synthetic trial record from a stochastic crash profile."""
    if deadline <= 0:
        raise ValueError("deadline must be > 0")
    rng = random.Random(rng_seed)
    if profile.kind == "deterministic-schedule":
        times = [t for t in profile.schedule if t <= deadline]
    else:
        times = []
        if profile.rate > 0:
            t = rng.expovariate(profile.rate)
            while t <= deadline:
                times.append(t)
                t += rng.expovariate(profile.rate)

    labels = sorted(profile.label_distribution)
    weights = [profile.label_distribution[lab] for lab in labels]

    crashes = []
    growth: list[tuple[float, int]] = []
    covered: set = set()
    for at in times:
        label = rng.choices(labels, weights)[0]
        prof = _label_profile(label)
        crashes.append(CrashEvent(at=at, input=label.encode(), profile=prof,
                                  trace=_label_trace(label)))
        new = prof - covered
        if new:
            covered.update(new)
            growth.append((at, len(covered)))

    return TrialRecord(
        fuzzer_id=fuzzer_id,
        target_id=target_id,
        seed_config_id=seed_config_id,
        trial_index=trial_index,
        rng_seed=rng_seed,
        deadline=deadline,
        crashes=tuple(crashes),
        coverage_growth=tuple(growth),
        executions=len(crashes),
    )
