"""Crash de-duplication strategies and their scoring against ground truth.

Three strategies are implemented:

* coverage-profile uniqueness (the online AFL-style rule): a crash is
  "unique" when its edge set contains an edge no previous crash had, or is
  missing an edge every previous crash had;
* stack hashing over the N innermost normalized frames;
* ground truth by replaying crashes across an ordered version sequence and
  labeling each input with the version that first fixes it.

``dedup_report`` scores a heuristic clustering (stack hashes) against
ground-truth labels, producing per-bug hash/match/false-match counts plus
overcount and non-unique-hash totals.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .core.targets import run_target
from .core.types import CoverageProfile, CrashEvent, StackTrace, TargetSpec
from .errors import StrategyUnavailableError

# Canonical textual form of the hashed frames; equal iff the frame lists are.
HashId = str

DEFAULT_HASH_FRAMES = 3


@dataclass(frozen=True)
class BugLabel:
    """Ground-truth identity of a crashing input.

    kind "fixed-by" carries the first version that no longer crashes;
    "unfixed" means the newest version still crashes; "unknown" marks a
    non-monotonic crash pattern across versions.
    """

    kind: str
    version: int | None = None

    def __post_init__(self):
        if self.kind not in ("fixed-by", "unfixed", "unknown"):
            raise ValueError(f"unknown bug label kind: {self.kind!r}")
        if (self.version is not None) != (self.kind == "fixed-by"):
            raise ValueError("version must be set exactly for fixed-by labels")

    def __str__(self) -> str:
        if self.kind == "fixed-by":
            return f"fixed-by-{self.version}"
        return self.kind


UNFIXED = BugLabel(kind="unfixed")
UNKNOWN = BugLabel(kind="unknown")


def fixed_by(version: int) -> BugLabel:
    return BugLabel(kind="fixed-by", version=version)


def _label_sort_key(label: BugLabel) -> tuple:
    order = {"fixed-by": 0, "unfixed": 1, "unknown": 2}
    return (order[label.kind], label.version if label.version is not None else -1)


def coverage_unique_online(events: Sequence[CrashEvent]) -> list[bool]:
    """Flag each crash event as coverage-"unique" or a duplicate, in order.

    Event i is unique iff its profile has an edge absent from the union of
    all earlier crashes' profiles, or lacks an edge present in every earlier
    crash. "Earlier" means all prior events, duplicates included. The first
    event is always unique.
    """
    flags: list[bool] = []
    union: set = set()
    intersection: set | None = None
    for ev in events:
        if not ev.profile:
            raise StrategyUnavailableError(
                "coverage-based dedup needs non-empty coverage profiles "
                "(external subprocess targets record none)"
            )
        if intersection is None:
            flags.append(True)
        else:
            new_edge = not ev.profile <= union
            missing_common = not intersection <= ev.profile
            flags.append(new_edge or missing_common)
        union |= ev.profile
        intersection = set(ev.profile) if intersection is None else intersection & ev.profile
    return flags


def cmin(profiles: Sequence[CoverageProfile]) -> list[int]:
    """Corpus pruning in the style of afl-cmin; returns retained indices.

    Phase 1 keeps every input owning an edge no other input has. Phase 2 is
    a documented extension beyond that rule: it greedily adds inputs in
    corpus order until the retained inputs cover the full corpus edge union,
    which makes coverage preservation an invariant rather than an accident.
    """
    for prof in profiles:
        if not prof:
            raise ValueError("cmin requires non-empty coverage profiles")
    owners: dict = {}
    for i, prof in enumerate(profiles):
        for edge in prof:
            owners.setdefault(edge, []).append(i)
    retained = sorted({idxs[0] for idxs in owners.values() if len(idxs) == 1})
    covered: set = set()
    for i in retained:
        covered |= profiles[i]
    full = set().union(*profiles) if profiles else set()
    if covered != full:
        kept = set(retained)
        for i, prof in enumerate(profiles):
            if i in kept:
                continue
            if prof - covered:
                retained.append(i)
                covered |= prof
                if covered == full:
                    break
        retained.sort()
    return retained


def stack_hash(trace: StackTrace, frames: int = DEFAULT_HASH_FRAMES) -> HashId:
    """Canonical fingerprint of the min(frames, len) innermost frames.

    Two traces collide exactly when their hashed frame lists are equal;
    the textual form is collision-free by construction.
    """
    if frames < 1:
        raise ValueError("frame count must be >= 1")
    if not trace:
        raise ValueError("cannot hash an empty stack trace")
    head = [[unit, line] for unit, line in trace[:frames]]
    return json.dumps(head, separators=(",", ":"))


def triage_versions(
    inputs: Sequence[bytes],
    versions: Sequence[TargetSpec],
    runner: Callable[[TargetSpec, bytes], object] = run_target,
) -> dict[bytes, BugLabel]:
    """Replay each crashing input across a version sequence (oldest first).

    An input fixed at version v (crashes strictly before v, never after) is
    labeled fixed-by v; still crashing on the newest version means unfixed;
    any non-monotonic pattern (recurring after a clean version) is unknown.
    Inputs must crash on version 0, otherwise they are not crashes of the
    fuzzed version at all.
    """
    if not versions:
        raise ValueError("need at least one version")
    labels: dict[bytes, BugLabel] = {}
    for data in inputs:
        pattern = [bool(runner(spec, data).crashed) for spec in versions]
        if not pattern[0]:
            raise ValueError(
                f"input {data!r} does not crash version 0; not a crash of the fuzzed version"
            )
        if all(pattern):
            labels[data] = UNFIXED
            continue
        first_clean = pattern.index(False)
        if any(pattern[first_clean:]):
            labels[data] = UNKNOWN
        else:
            labels[data] = fixed_by(first_clean)
    return labels


@dataclass(frozen=True)
class DedupRow:
    label: BugLabel
    hashes: int
    matches: int
    false_matches: int
    inputs: int


@dataclass(frozen=True)
class DedupTable:
    """Per-bug hash statistics plus corpus-level overcount totals."""

    rows: tuple[DedupRow, ...]
    distinct_hashes: int
    distinct_bugs: int
    overcount_factor: float
    nonunique_hash_fraction: float


def dedup_report(labels: Mapping[bytes, BugLabel],
                 hashes: Mapping[bytes, HashId]) -> DedupTable:
    """Score a stack-hash clustering against ground-truth bug labels.

    A hash "matches" a bug when it occurs only under that bug's inputs; a
    hash seen under several bugs is a false match for each of them. The
    overcount factor is distinct hashes per distinct fixed-by bug, and the
    non-unique fraction is the share of hashes spanning more than one bug.
    """
    if not labels:
        raise ValueError("empty crash corpus")
    if set(labels) != set(hashes):
        raise ValueError("labels and hashes must cover the same inputs")

    hash_labels: dict[HashId, set[BugLabel]] = {}
    for data, label in labels.items():
        hash_labels.setdefault(hashes[data], set()).add(label)

    by_label: dict[BugLabel, list[bytes]] = {}
    for data, label in labels.items():
        by_label.setdefault(label, []).append(data)

    rows = []
    for label in sorted(by_label, key=_label_sort_key):
        label_hashes = {hashes[data] for data in by_label[label]}
        matches = sum(1 for h in label_hashes if hash_labels[h] == {label})
        rows.append(DedupRow(
            label=label,
            hashes=len(label_hashes),
            matches=matches,
            false_matches=len(label_hashes) - matches,
            inputs=len(by_label[label]),
        ))

    distinct_hashes = len(hash_labels)
    distinct_bugs = sum(1 for label in by_label if label.kind == "fixed-by")
    nonunique = sum(1 for labs in hash_labels.values() if len(labs) > 1)
    overcount = distinct_hashes / distinct_bugs if distinct_bugs else math.inf
    return DedupTable(
        rows=tuple(rows),
        distinct_hashes=distinct_hashes,
        distinct_bugs=distinct_bugs,
        overcount_factor=overcount,
        nonunique_hash_fraction=nonunique / distinct_hashes,
    )


def dedup_table_csv(table: DedupTable) -> str:
    """Render a dedup table as CSV (bug,hashes,matches,false_matches,inputs)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["bug", "hashes", "matches", "false_matches", "inputs"])
    for row in table.rows:
        writer.writerow([str(row.label), row.hashes, row.matches,
                         row.false_matches, row.inputs])
    return out.getvalue()
