"""Definitional brute-force statistics used as ground truth in tests.

Every function here enumerates partitions literally from their definitions
and evaluates each one cell by cell.  Nothing is shared with the fast paths
beyond the cumulative grid, and a hard enumeration budget makes accidental
use on large inputs fail fast.  Not built for performance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .core import GroupedSample, RankedSample, ScoreKind, cumulative_count_grid

__all__ = [
    "PartitionEnumeration",
    "partition_count",
    "oracle_ksample",
    "oracle_adp",
    "oracle_ddp",
    "oracle_hhg",
]

ENUMERATION_BUDGET = 10**6


def partition_count(problem: str, n: int, m: int) -> int:
    """Closed-form number of partitions of size m for each enumeration kind."""
    if problem == "ksample":
        return math.comb(n - 1, m - 1)
    if problem == "adp":
        return math.comb(n - 1, m - 1) ** 2
    if problem == "ddp":
        return math.comb(n, m - 1)
    raise ValueError(f"unknown enumeration kind: {problem!r}")


@dataclass(frozen=True)
class PartitionEnumeration:
    """Explicit list of partitions: cut tuples (interval/grid) or point subsets."""

    problem: str
    partitions: tuple

    @classmethod
    def enumerate(cls, problem: str, n: int, m: int) -> "PartitionEnumeration":
        count = partition_count(problem, n, m)
        if count > ENUMERATION_BUDGET:
            raise ValueError(f"enumeration budget exceeded: {count} > {ENUMERATION_BUDGET}")
        if problem == "ksample":
            parts = tuple(combinations(range(1, n), m - 1))
        elif problem == "adp":
            axis = tuple(combinations(range(1, n), m - 1))
            parts = tuple((cx, cy) for cx in axis for cy in axis)
        elif problem == "ddp":
            parts = tuple(combinations(range(n), m - 1))
        else:
            raise ValueError(f"unknown enumeration kind: {problem!r}")
        return cls(problem=problem, partitions=parts)

    def __len__(self) -> int:
        return len(self.partitions)


def _score_fn(score):
    score = ScoreKind.parse(score)
    if score is ScoreKind.PEARSON:

        def t_cell(o, e):
            if e == 0.0:
                return 0.0
            return (o - e) ** 2 / e

    else:

        def t_cell(o, e):
            if o == 0:
                return 0.0
            return o * math.log(o / e)

    return t_cell


def oracle_ksample(sample: GroupedSample, score, m: int) -> tuple[float, float]:
    """Exhaustive (sum, max) of the partition score over all interval partitions."""
    n = sample.n
    if not 2 <= m <= n:
        raise ValueError("m must lie in 2..N")
    count = partition_count("ksample", n, m)
    if count > ENUMERATION_BUDGET:
        raise ValueError(f"enumeration budget exceeded: {count} > {ENUMERATION_BUDGET}")
    t_cell = _score_fn(score)
    labels = sample.labels_by_rank
    k = sample.k
    cum = [[0] * (n + 1) for _ in range(k)]
    for g in range(k):
        row = cum[g]
        for r in range(1, n + 1):
            row[r] = row[r - 1] + (1 if labels[r - 1] == g + 1 else 0)
    frac = [ng / n for ng in sample.group_sizes]
    scores = []
    for cuts in combinations(range(1, n), m - 1):
        bounds = (0,) + cuts + (n,)
        total = 0.0
        for t in range(m):
            lo, hi = bounds[t], bounds[t + 1]
            w = hi - lo
            for g in range(k):
                total += t_cell(cum[g][hi] - cum[g][lo], w * frac[g])
        scores.append(total)
    return math.fsum(scores), max(scores)


def oracle_adp(x: RankedSample, y: RankedSample, score, m: int) -> tuple[float, float]:
    """Exhaustive (sum, max) over all m x m grid partitions of the rank plane."""
    n = x.n
    if not 2 <= m <= n:
        raise ValueError("m must lie in 2..N")
    count = partition_count("adp", n, m)
    if count > ENUMERATION_BUDGET:
        raise ValueError(f"enumeration budget exceeded: {count} > {ENUMERATION_BUDGET}")
    t_cell = _score_fn(score)
    a = cumulative_count_grid(x, y).a
    axis_cuts = [(0,) + c + (n,) for c in combinations(range(1, n), m - 1)]
    scores = []
    for bx in axis_cuts:
        for by in axis_cuts:
            total = 0.0
            for i in range(m):
                for j in range(m):
                    o = (
                        a[bx[i + 1], by[j + 1]]
                        - a[bx[i], by[j + 1]]
                        - a[bx[i + 1], by[j]]
                        + a[bx[i], by[j]]
                    )
                    e = (bx[i + 1] - bx[i]) * (by[j + 1] - by[j]) / n
                    total += t_cell(o, e)
            scores.append(total)
    return math.fsum(scores), max(scores)


def oracle_ddp(x: RankedSample, y: RankedSample, score, m: int) -> tuple[float, float]:
    """Exhaustive (sum, max) over all point-anchored partitions.

    Each subset of m-1 sample points induces cut lines through its ranks;
    cells count only the points strictly inside, with expected counts
    (inner width)(inner length)/(N - m + 1).
    """
    n = x.n
    if not 2 <= m <= n:
        raise ValueError("m must lie in 2..N")
    count = partition_count("ddp", n, m)
    if count > ENUMERATION_BUDGET:
        raise ValueError(f"enumeration budget exceeded: {count} > {ENUMERATION_BUDGET}")
    t_cell = _score_fn(score)
    a = cumulative_count_grid(x, y).a
    xr = x.ranks
    yr = y.ranks
    div = n - m + 1
    scores = []
    for pts in combinations(range(n), m - 1):
        sel = list(pts)
        bx = (0,) + tuple(sorted(int(r) for r in xr[sel])) + (n + 1,)
        by = (0,) + tuple(sorted(int(s) for s in yr[sel])) + (n + 1,)
        total = 0.0
        for i in range(m):
            rl, rh = bx[i], bx[i + 1]
            width = rh - rl - 1
            if width <= 0:
                continue
            for j in range(m):
                sl, sh = by[j], by[j + 1]
                area = width * (sh - sl - 1)
                if area <= 0:
                    continue
                o = (
                    a[rh - 1, sh - 1]
                    - a[rl, sh - 1]
                    - a[rh - 1, sl]
                    + a[rl, sl]
                )
                total += t_cell(o, area / div)
        scores.append(total)
    return math.fsum(scores), max(scores)


def oracle_hhg(x, y) -> float:
    """Naive O(N^3) pairwise-classification statistic (per-pair 2x2 tables)."""
    xv = x.ranks.astype(float) if isinstance(x, RankedSample) else np.asarray(x, dtype=float)
    yv = y.ranks.astype(float) if isinstance(y, RankedSample) else np.asarray(y, dtype=float)
    n = xv.size
    if n < 3:
        raise ValueError("need at least three observations")
    if n > 200:
        raise ValueError("oracle limited to N <= 200")
    total = 0.0
    nn = float(n - 2)
    for i in range(n):
        dx = np.abs(xv - xv[i])
        dy = np.abs(yv - yv[i])
        for j in range(n):
            if j == i:
                continue
            keep = np.ones(n, dtype=bool)
            keep[i] = False
            keep[j] = False
            mx = (dx < dx[j]) & keep
            my = (dy < dy[j]) & keep
            a11 = float(np.count_nonzero(mx & my))
            r1 = float(np.count_nonzero(mx))
            c1 = float(np.count_nonzero(my))
            den = r1 * (nn - r1) * c1 * (nn - c1)
            if den <= 0:
                continue
            a22 = nn - r1 - c1 + a11
            a12 = r1 - a11
            a21 = c1 - a11
            total += nn * (a11 * a22 - a12 * a21) ** 2 / den
    return total
