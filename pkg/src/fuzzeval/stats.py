"""Nonparametric statistics for comparing fuzzer performance samples.

Provides the Mann-Whitney U test (exact by full enumeration for small
samples, tie-corrected normal approximation otherwise), the Vargha-Delaney
A12 effect size, distribution-free median confidence intervals from order
statistics, a permutation test on the median difference, crash-seconds AUC,
and median/CI/min-max band aggregation of crash time series.

All tests are two-sided. Exact paths switch to approximations only when the
number of group labelings C(n+m, n) exceeds ``EXACT_ENUMERATION_LIMIT``.
"""

from __future__ import annotations

import bisect
import itertools
import math
import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

Sample = Sequence[float]

EXACT_ENUMERATION_LIMIT = 200_000


@dataclass(frozen=True)
class TestResult:
    """Mann-Whitney outcome: U for the first sample, two-sided p, method, A12."""

    u_statistic: float
    p_value: float
    method: str  # "exact" | "normal-approximation"
    a12: float


@dataclass(frozen=True)
class MedianCI:
    """A distribution-free median confidence interval.

    ``achieved_level`` is the exact binomial coverage of the chosen order
    statistic pair; ``below_nominal`` flags samples too small to reach the
    requested level even with the widest interval.
    """

    median: float
    lo: float
    hi: float
    achieved_level: float
    below_nominal: bool


def _require_nonempty(*samples: Sample) -> None:
    for s in samples:
        if len(s) == 0:
            raise ValueError("sample must be non-empty")


def _doubled_midranks(values: Sequence[float]) -> list[int]:
    """Midranks scaled by 2 so tied-rank arithmetic stays in exact integers."""
    order = sorted(range(len(values)), key=values.__getitem__)
    doubled = [0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        # ranks i+1 .. j+1 share the midrank (i + j + 2) / 2
        for k in range(i, j + 1):
            doubled[order[k]] = i + j + 2
        i = j + 1
    return doubled


def _double_u(a: Sample, b: Sample) -> int:
    """2*U for sample ``a``, via rank sums over the pooled midranks."""
    n = len(a)
    pooled = list(a) + list(b)
    doubled = _doubled_midranks(pooled)
    rank_sum2 = sum(doubled[:n])
    return rank_sum2 - n * (n + 1)


def _exact_two_sided_p(pooled: Sequence[float], n: int, dev2_obs: int) -> float:
    """Exact p by enumerating every way to label n of the pooled values "a".

    ``dev2_obs`` is |2U - n*m| for the observed labeling; a labeling counts
    as at least as extreme when its deviation reaches that value.
    """
    m = len(pooled) - n
    doubled = _doubled_midranks(pooled)
    offset = n * (n + 1)
    extreme = 0
    total = 0
    for combo in itertools.combinations(range(len(pooled)), n):
        u2 = sum(doubled[i] for i in combo) - offset
        if abs(u2 - n * m) >= dev2_obs:
            extreme += 1
        total += 1
    return extreme / total


def _normal_two_sided_p(a: Sample, b: Sample, u: float) -> float:
    """Tie-corrected normal approximation with continuity correction."""
    n, m = len(a), len(b)
    big_n = n + m
    pooled = sorted(list(a) + list(b))
    tie_term = 0
    i = 0
    while i < big_n:
        j = i
        while j + 1 < big_n and pooled[j + 1] == pooled[i]:
            j += 1
        t = j - i + 1
        tie_term += t ** 3 - t
        i = j + 1
    if big_n < 2:
        return 1.0
    var = (n * m / 12.0) * ((big_n + 1) - tie_term / (big_n * (big_n - 1)))
    if var <= 0:
        return 1.0
    num = max(0.0, abs(u - n * m / 2.0) - 0.5)
    z = num / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def mann_whitney_u(a: Sample, b: Sample) -> TestResult:
    """Two-sided Mann-Whitney U test with midranks for ties.

    U is reported for ``a``: the number of (a_i, b_j) pairs with a_i > b_j,
    ties counting one half. The p-value is exact (full enumeration of
    labelings) when C(n+m, n) <= EXACT_ENUMERATION_LIMIT, otherwise a
    tie-corrected normal approximation with continuity correction.
    """
    _require_nonempty(a, b)
    n, m = len(a), len(b)
    u2 = _double_u(a, b)
    u = u2 / 2.0
    if math.comb(n + m, n) <= EXACT_ENUMERATION_LIMIT:
        p = _exact_two_sided_p(list(a) + list(b), n, abs(u2 - n * m))
        method = "exact"
    else:
        p = _normal_two_sided_p(a, b, u)
        method = "normal-approximation"
    return TestResult(u_statistic=u, p_value=p, method=method, a12=u / (n * m))


def vargha_delaney_a12(a: Sample, b: Sample) -> float:
    """A12 effect size: P(a > b) + 0.5 * P(a = b) over all sample pairs.

    0.5 means no effect; 1.0 means every value of ``a`` beats every value
    of ``b``. Computed from rank sums, which is exact for midranked ties.
    """
    _require_nonempty(a, b)
    return _double_u(a, b) / (2.0 * len(a) * len(b))


@lru_cache(maxsize=None)
def _median_rank_pair(n: int, level: float) -> tuple[int, float, bool]:
    """Largest k whose (k, n+1-k) order-statistic interval covers the median
    with binomial(n, 1/2) probability >= level. Falls back to (1, n)."""
    best_k, best_cov = None, 0.0
    for k in range(1, n // 2 + 2):
        if k > n + 1 - k:
            break
        numer = sum(math.comb(n, i) for i in range(k, n - k + 1))
        cov = numer / (1 << n)
        if cov >= level:
            best_k, best_cov = k, cov  # coverage shrinks as k grows
        else:
            break
    if best_k is None:
        numer = sum(math.comb(n, i) for i in range(1, n))
        return 1, numer / (1 << n), True
    return best_k, best_cov, False


def median_ci(s: Sample, level: float = 0.95) -> MedianCI:
    """Conservative distribution-free CI for the median via order statistics.

    Picks the symmetric rank pair (k, n+1-k) with the largest k whose exact
    binomial coverage still reaches ``level``, so the achieved level is
    always >= the nominal one when attainable. A degenerate sample (all
    values equal) yields the point interval with achieved level 1.
    """
    _require_nonempty(s)
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    xs = sorted(s)
    n = len(xs)
    med = xs[n // 2] if n % 2 else (xs[n // 2 - 1] + xs[n // 2]) / 2.0
    if xs[0] == xs[-1]:
        return MedianCI(median=med, lo=xs[0], hi=xs[0], achieved_level=1.0,
                        below_nominal=False)
    k, achieved, below = _median_rank_pair(n, level)
    return MedianCI(median=med, lo=xs[k - 1], hi=xs[n - k],
                    achieved_level=achieved, below_nominal=below)


def permutation_test_median(a: Sample, b: Sample, iterations: int = 10_000,
                            rng_seed: int = 0) -> float:
    """Two-sided permutation test on |median(a) - median(b)|.

    Enumerates every split exactly when C(n+m, n) is within the exact
    limit; otherwise Monte-Carlo with add-one smoothing
    p = (1 + #extreme) / (1 + iterations).
    """
    _require_nonempty(a, b)
    n, m = len(a), len(b)
    pooled = list(a) + list(b)
    t_obs = abs(_median(list(a)) - _median(list(b)))
    threshold = t_obs - 1e-12
    if math.comb(n + m, n) <= EXACT_ENUMERATION_LIMIT:
        extreme = total = 0
        indices = range(n + m)
        for combo in itertools.combinations(indices, n):
            in_a = set(combo)
            med_a = _median([pooled[i] for i in combo])
            med_b = _median([pooled[i] for i in indices if i not in in_a])
            if abs(med_a - med_b) >= threshold:
                extreme += 1
            total += 1
        return extreme / total
    if iterations < 100:
        raise ValueError("Monte-Carlo permutation test needs >= 100 iterations")
    rng = random.Random(rng_seed)
    work = list(pooled)
    extreme = 0
    for _ in range(iterations):
        rng.shuffle(work)
        if abs(_median(work[:n]) - _median(work[n:])) >= threshold:
            extreme += 1
    return (1 + extreme) / (1 + iterations)


def _median(values: list[float]) -> float:
    values = sorted(values)
    n = len(values)
    return values[n // 2] if n % 2 else (values[n // 2 - 1] + values[n // 2]) / 2.0


@dataclass(frozen=True)
class CrashTimeSeries:
    """Cumulative crash counts over one trial, beginning at (0, 0).

    Between points the count is read with step semantics (the last point at
    or before t); the AUC integration below instead interpolates linearly,
    which is the rule that rewards earlier discoveries proportionally.
    """

    points: tuple[tuple[float, int], ...]

    def __post_init__(self):
        if not self.points:
            raise ValueError("series must contain at least the origin point")
        if tuple(self.points[0]) != (0.0, 0) and tuple(self.points[0]) != (0, 0):
            raise ValueError("series must begin with (0, 0)")
        last_t, last_c = None, None
        for t, c in self.points:
            if last_t is not None:
                if t <= last_t:
                    raise ValueError("series times must be strictly increasing")
                if c < last_c:
                    raise ValueError("series counts must be non-decreasing")
            if c != int(c):
                raise ValueError("series counts must be integers")
            last_t, last_c = t, c

    @classmethod
    def from_event_times(cls, times: Sequence[float],
                         grid: Sequence[float] | None = None) -> "CrashTimeSeries":
        """Build a series from sorted event times.

        Without a grid, one point per distinct event time (simultaneous
        events collapse into one jump). With a grid, the cumulative count is
        sampled at each grid time instead, which records plateaus explicitly.
        """
        times = list(times)
        if times != sorted(times):
            raise ValueError("event times must be sorted")
        if times and times[0] <= 0:
            raise ValueError("event times must be > 0")
        points: list[tuple[float, int]] = [(0.0, 0)]
        if grid is None:
            for i, t in enumerate(times):
                if points[-1][0] == t:
                    points[-1] = (t, i + 1)
                else:
                    points.append((t, i + 1))
        else:
            for g in grid:
                if g <= points[-1][0]:
                    raise ValueError("grid times must be strictly increasing and > 0")
                points.append((g, bisect.bisect_right(times, g)))
        return cls(points=tuple(points))

    def value_at(self, t: float) -> int:
        """Step-semantics count at time t (count of the last point <= t)."""
        times = [p[0] for p in self.points]
        i = bisect.bisect_right(times, t)
        return 0 if i == 0 else self.points[i - 1][1]


def crash_auc(series: CrashTimeSeries, horizon: float) -> float:
    """Crash-seconds: the time integral of the cumulative crash count.

    Integrates the piecewise-linear interpolation through the series points
    by the trapezoid rule, clipped at ``horizon`` and extended flat beyond
    the last point. Earlier crashes therefore contribute more area.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    area = 0.0
    for (t0, c0), (t1, c1) in itertools.pairwise(series.points):
        if t0 >= horizon:
            return area
        if t1 <= horizon:
            area += (t1 - t0) * (c0 + c1) / 2.0
        else:
            ch = c0 + (c1 - c0) * (horizon - t0) / (t1 - t0)
            area += (horizon - t0) * (c0 + ch) / 2.0
            return area
    last_t, last_c = series.points[-1]
    if horizon > last_t:
        area += last_c * (horizon - last_t)
    return area


@dataclass(frozen=True)
class Band:
    """Per-grid-time median, CI bounds and extremes across trials."""

    grid: tuple[float, ...]
    median: tuple[float, ...]
    ci_lo: tuple[float, ...]
    ci_hi: tuple[float, ...]
    min: tuple[float, ...]
    max: tuple[float, ...]

    def __post_init__(self):
        k = len(self.grid)
        if not all(len(v) == k for v in (self.median, self.ci_lo, self.ci_hi,
                                         self.min, self.max)):
            raise ValueError("band columns must all match the grid length")


def aggregate_band(trials: Sequence[CrashTimeSeries], grid: Sequence[float],
                   level: float = 0.95) -> Band:
    """Aggregate trial series into a median/CI/min-max band on a time grid.

    Counts are evaluated with step semantics at each grid time, then
    summarized across trials. With a single trial all five columns coincide.
    """
    if not trials:
        raise ValueError("need at least one trial series")
    grid = list(grid)
    if grid != sorted(grid):
        raise ValueError("grid must be sorted")
    med, lo, hi, mn, mx = [], [], [], [], []
    for g in grid:
        vals = [tr.value_at(g) for tr in trials]
        ci = median_ci(vals, level)
        med.append(ci.median)
        lo.append(ci.lo)
        hi.append(ci.hi)
        mn.append(min(vals))
        mx.append(max(vals))
    return Band(grid=tuple(grid), median=tuple(med), ci_lo=tuple(lo),
                ci_hi=tuple(hi), min=tuple(mn), max=tuple(mx))
