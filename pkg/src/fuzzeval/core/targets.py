"""Built-in instrumented toy targets and the target execution entry point.

Each built-in family is a tiny deterministic program with a known planted
bug count, simulated at the level of basic blocks. An execution yields the
set of control-flow edges (consecutive block pairs) it exercised and, on a
crash, a normalized stack trace. The families:

branchy-crash
    One unconditionally-crashing helper reached through a data-dependent
    branch on the first input byte ('a' vs anything else). One bug, but the
    two input classes produce coverage profiles that differ in the branch
    edge, so coverage-based "unique crash" counting sees two.

shared-crash-paths
    One corrupting bug in ``format`` whose failure manifests two calls
    deeper, in ``output``, reachable via caller ``f`` (even first byte) or
    ``g`` (odd first byte). The two crash stacks share their three innermost
    frames and differ at depth four.

versioned-family
    One program built at 8 successive versions with 4 planted bugs; the
    first input byte mod 4 selects the bug site, and bug ``i`` is present in
    versions 0..i (fixed by version ``i + 1``). Replaying a crash across the
    version sequence recovers its ground-truth bug identity.

external-subprocess
    A real executable. The input is written to a temporary file passed as
    argv[1]. A crash is abnormal termination by SIGSEGV/SIGABRT/SIGILL/
    SIGFPE/SIGBUS, or a stderr line starting with an AddressSanitizer or
    UBSan report marker. External targets record empty coverage profiles.
"""

from __future__ import annotations

import os
import signal
import subprocess
import tempfile
import time

from ..errors import ExecutionError
from .types import CoverageProfile, Frame, Observation, StackTrace, TargetSpec

VERSIONED_BUG_COUNT = 4
VERSIONED_VERSION_COUNT = 8

# Signals whose delivery counts as a crash for external targets.
_CRASH_SIGNALS = {
    signal.SIGSEGV,
    signal.SIGABRT,
    signal.SIGILL,
    signal.SIGFPE,
    signal.SIGBUS,
}
_SANITIZER_PREFIXES = ("ERROR: AddressSanitizer", "runtime error:")


def _edges(blocks: list[int]) -> CoverageProfile:
    return frozenset(zip(blocks, blocks[1:]))


# --- branchy-crash ---------------------------------------------------------
# Block layout: 0 entry, 1 guard body, 2 'a' call site, 3 other call site,
# 4 normal return. The crash happens inside the called helper, so the 'a'
# and non-'a' profiles each contain exactly one edge the other lacks.

_BRANCHY_UNIT = "branchy.c"
_BRANCHY_CRASH_LINE = 10  # helper body that faults unconditionally
_BRANCHY_CALL_A_LINE = 4
_BRANCHY_CALL_OTHER_LINE = 5


def _run_branchy(data: bytes):
    blocks = [0]
    if len(data) >= 1:
        blocks.append(1)
        if data[0] == ord("a"):
            blocks.append(2)
            call_line = _BRANCHY_CALL_A_LINE
        else:
            blocks.append(3)
            call_line = _BRANCHY_CALL_OTHER_LINE
        trace: StackTrace = (
            (_BRANCHY_UNIT, _BRANCHY_CRASH_LINE),
            (_BRANCHY_UNIT, call_line),
        )
        return True, _edges(blocks), trace
    blocks.append(4)
    return False, _edges(blocks), None


# --- shared-crash-paths ----------------------------------------------------
# Block layout: 0 entry, 1 guard body, 2 caller f, 3 caller g, 4 format,
# 5 prepare, 6 output (faults), 7 normal return.

_SHARED_UNIT = "sharedpaths.c"
_SHARED_LINE_F = 1
_SHARED_LINE_G = 2
_SHARED_LINE_FORMAT = 4   # format's call into prepare (after corrupting)
_SHARED_LINE_PREPARE = 6  # prepare's call into output
_SHARED_LINE_OUTPUT = 8   # failure manifests here
_SHARED_LINE_MAIN = 10


def _run_shared_paths(data: bytes):
    blocks = [0]
    if len(data) >= 1:
        blocks.append(1)
        via_f = data[0] % 2 == 0
        blocks.append(2 if via_f else 3)
        blocks.extend((4, 5, 6))
        trace: StackTrace = (
            (_SHARED_UNIT, _SHARED_LINE_OUTPUT),
            (_SHARED_UNIT, _SHARED_LINE_PREPARE),
            (_SHARED_UNIT, _SHARED_LINE_FORMAT),
            (_SHARED_UNIT, _SHARED_LINE_F if via_f else _SHARED_LINE_G),
            (_SHARED_UNIT, _SHARED_LINE_MAIN),
        )
        return True, _edges(blocks), trace
    blocks.append(7)
    return False, _edges(blocks), None


# --- versioned-family ------------------------------------------------------
# Block layout: 0 entry, 1 guard body, 2 normal return; per bug site j:
# 10+3j dispatch, 11+3j buggy body, 12+3j patched body.

_VERSIONED_UNIT = "versioned.c"
_VERSIONED_LINE_MAIN = 3


def planted_bug_index(data: bytes) -> int | None:
    """Which bug site an input drives into, or None for the empty input."""
    if not data:
        return None
    return data[0] % VERSIONED_BUG_COUNT


def planted_fix_version(bug: int) -> int:
    """The first version in which bug ``bug`` is gone (bug i lives in 0..i)."""
    return bug + 1


def versioned_targets(count: int = VERSIONED_VERSION_COUNT) -> list[TargetSpec]:
    """The version sequence, oldest first."""
    return [TargetSpec(family="versioned-family", version=v) for v in range(count)]


def _run_versioned(data: bytes, version: int):
    blocks = [0]
    if len(data) == 0:
        blocks.append(2)
        return False, _edges(blocks), None
    blocks.append(1)
    j = planted_bug_index(data)
    blocks.append(10 + 3 * j)
    if version < planted_fix_version(j):
        blocks.append(11 + 3 * j)
        trace: StackTrace = (
            (_VERSIONED_UNIT, 100 + j),
            (_VERSIONED_UNIT, 50 + j),
            (_VERSIONED_UNIT, _VERSIONED_LINE_MAIN),
        )
        return True, _edges(blocks), trace
    blocks.append(12 + 3 * j)
    blocks.append(2)
    return False, _edges(blocks), None


# --- external-subprocess ---------------------------------------------------

def _classify_external(returncode: int, stderr: bytes):
    """Map a finished process to (crashed, trace)."""
    if returncode < 0 and -returncode in {s.value for s in _CRASH_SIGNALS}:
        name = signal.Signals(-returncode).name
        return True, ((f"signal:{name}", -returncode),)
    for raw_line in stderr.decode("utf-8", errors="replace").splitlines():
        line = raw_line.lstrip()
        for prefix in _SANITIZER_PREFIXES:
            if line.startswith(prefix):
                return True, ((f"sanitizer:{prefix.rstrip(': ')}", 0),)
    return False, None


def _run_external(path: str, data: bytes):
    tmp = tempfile.NamedTemporaryFile(prefix="fuzzeval-", delete=False)
    try:
        tmp.write(data)
        tmp.close()
        try:
            proc = subprocess.run(
                [path, tmp.name],
                stdout=subprocess.DEVNULL,
                stderr=subprocess.PIPE,
            )
        except OSError as exc:
            raise ExecutionError(f"failed to execute {path!r}: {exc}") from exc
        crashed, trace = _classify_external(proc.returncode, proc.stderr)
        return crashed, frozenset(), trace
    finally:
        os.unlink(tmp.name)


def run_target(spec: TargetSpec, data: bytes) -> Observation:
    """Execute one input against a target and observe the result.

    Deterministic for built-in families apart from ``duration_us``.
    Raises ExecutionError when an external target cannot be spawned.
    """
    start = time.perf_counter_ns()
    if spec.family == "branchy-crash":
        crashed, edges, trace = _run_branchy(data)
    elif spec.family == "shared-crash-paths":
        crashed, edges, trace = _run_shared_paths(data)
    elif spec.family == "versioned-family":
        crashed, edges, trace = _run_versioned(data, spec.version)
    else:
        crashed, edges, trace = _run_external(spec.path, data)
    duration_us = (time.perf_counter_ns() - start) // 1000
    return Observation(crashed=crashed, edges=edges, trace=trace, duration_us=duration_us)
