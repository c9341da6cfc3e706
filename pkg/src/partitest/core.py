"""Shared primitives: rank transforms, cell scores, binomial tables, count grids.

Everything downstream (the K-sample statistics, the independence statistics,
the null tables) works on integer ranks.  This module owns the rank transform
with deterministic random tie-breaking, the two cell scoring rules, Pascal's
triangle tables of binomial coefficients, and the double-cumulative count grid
that makes every rectangle count an O(1) lookup.

All values are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

__all__ = [
    "ScoreKind",
    "RankedSample",
    "GroupedSample",
    "BinomialTable",
    "CumulativeCountGrid",
    "rank_with_random_ties",
    "cell_score",
    "ksample_cell_score",
    "binomial_table",
    "cumulative_count_grid",
]


class ScoreKind(Enum):
    """Scoring rule applied to each cell of a partition."""

    PEARSON = "pearson"
    LIKELIHOOD_RATIO = "lr"

    @classmethod
    def parse(cls, value: "ScoreKind | str") -> "ScoreKind":
        if isinstance(value, ScoreKind):
            return value
        key = str(value).strip().lower().replace("_", "-")
        if key in ("pearson", "chisq"):
            return cls.PEARSON
        if key in ("lr", "likelihood-ratio", "loglik"):
            return cls.LIKELIHOOD_RATIO
        raise ValueError(f"unknown score kind: {value!r}")


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def _check_permutation(ranks: np.ndarray) -> None:
    n = ranks.size
    if n == 0:
        raise ValueError("empty sample")
    if ranks.min() < 1 or ranks.max() > n:
        raise ValueError("ranks must lie in 1..N")
    counts = np.bincount(ranks, minlength=n + 1)
    if counts[1:].max() != 1:
        raise ValueError("ranks must form a permutation of 1..N")


@dataclass(frozen=True)
class RankedSample:
    """Rank-transformed univariate observations, ties already broken.

    ``ranks`` is a permutation of 1..N; ``tie_seed`` records the seed used to
    break ties so the transform is reproducible.
    """

    ranks: np.ndarray
    n: int
    tie_seed: int

    def __post_init__(self):
        ranks = np.ascontiguousarray(self.ranks, dtype=np.int64)
        if ranks.ndim != 1 or ranks.size != self.n:
            raise ValueError("rank vector length must equal N")
        _check_permutation(ranks)
        object.__setattr__(self, "ranks", _freeze(ranks))


def rank_with_random_ties(values, tie_seed: int = 0) -> RankedSample:
    """Rank a sample into 1..N, breaking ties by a seeded shuffle.

    Untied values are ranked by order.  Tied values are ordered by a seeded
    Fisher-Yates shuffle of the indices, so the same input and seed always
    produce the same ranks and the result is still a true permutation.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError("expected a one-dimensional sample")
    n = arr.size
    if n == 0:
        raise ValueError("empty sample")
    if not np.all(np.isfinite(arr)):
        raise ValueError("sample contains non-finite values")
    if tie_seed < 0:
        raise ValueError("tie_seed must be a non-negative integer")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(tie_seed)))
    shuffled = rng.permutation(n)
    order = np.lexsort((shuffled, arr))
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(1, n + 1)
    return RankedSample(ranks=ranks, n=n, tie_seed=int(tie_seed))


@dataclass(frozen=True)
class GroupedSample:
    """K-sample data: group labels in 1..K paired with ranked responses.

    ``labels[i]`` belongs to the observation whose response rank is
    ``y_ranks.ranks[i]``; the statistics only consume :meth:`labels_by_rank`.
    """

    labels: np.ndarray
    y_ranks: RankedSample
    group_sizes: tuple[int, ...]

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        n = self.y_ranks.n
        if labels.ndim != 1 or labels.size != n:
            raise ValueError("labels length must equal sample size")
        k = len(self.group_sizes)
        if k < 2:
            raise ValueError("need at least two groups")
        if labels.min() < 1 or labels.max() > k:
            raise ValueError("labels must lie in 1..K")
        sizes = np.bincount(labels, minlength=k + 1)[1:]
        if any(s < 1 for s in sizes):
            raise ValueError("every group must be non-empty")
        if tuple(int(s) for s in sizes) != tuple(self.group_sizes):
            raise ValueError("group_sizes do not match the labels")
        object.__setattr__(self, "labels", _freeze(labels))
        object.__setattr__(self, "group_sizes", tuple(int(s) for s in self.group_sizes))
        by_rank = np.empty(n, dtype=np.int64)
        by_rank[self.y_ranks.ranks - 1] = labels
        object.__setattr__(self, "_labels_by_rank", _freeze(by_rank))

    @classmethod
    def from_values(cls, labels, values, tie_seed: int = 0) -> "GroupedSample":
        """Build from raw labels and responses; labels may be any sortable tokens."""
        raw = np.asarray(labels)
        uniq = np.unique(raw)
        if uniq.size < 2:
            raise ValueError("need at least two groups")
        coded = np.searchsorted(uniq, raw) + 1
        sizes = tuple(int(c) for c in np.bincount(coded, minlength=uniq.size + 1)[1:])
        ranked = rank_with_random_ties(values, tie_seed)
        return cls(labels=coded, y_ranks=ranked, group_sizes=sizes)

    @property
    def n(self) -> int:
        return self.y_ranks.n

    @property
    def k(self) -> int:
        return len(self.group_sizes)

    @property
    def labels_by_rank(self) -> np.ndarray:
        """Group labels reordered so position r holds the label of rank r+1."""
        return self._labels_by_rank


def cell_score(observed: float, expected: float, kind) -> float:
    """Score one cell: Pearson (o-e)^2/e or likelihood ratio o*log(o/e).

    Conventions: a cell with o = e = 0 scores 0, and the likelihood-ratio term
    is 0 whenever o = 0.  A positive count with zero expected mass cannot occur
    for the partitions built here and is rejected as a contract violation.
    """
    kind = ScoreKind.parse(kind)
    o = float(observed)
    e = float(expected)
    if o < 0 or e < 0:
        raise ValueError("counts and expected masses must be non-negative")
    if e == 0.0:
        if o == 0.0:
            return 0.0
        raise ValueError("impossible cell: positive count with zero expected mass")
    if kind is ScoreKind.PEARSON:
        return (o - e) ** 2 / e
    if o == 0.0:
        return 0.0
    return o * math.log(o / e)


def ksample_cell_score(counts_per_group, expected_per_group, kind) -> float:
    """Sum of per-group cell scores for one interval cell of a K-sample partition."""
    o = np.asarray(counts_per_group, dtype=float)
    e = np.asarray(expected_per_group, dtype=float)
    if o.shape != e.shape:
        raise ValueError("observed and expected vectors must have equal length")
    return math.fsum(cell_score(oi, ei, kind) for oi, ei in zip(o, e))


@dataclass(frozen=True)
class BinomialTable:
    """All C(u, v) for 0 <= u, v <= n, stored as doubles.

    Doubles are exact through every value used here and keep relative error
    below 1e-12 elsewhere; all downstream uses are ratios or weights.
    """

    n: int
    table: np.ndarray

    def choose(self, u, v):
        """C(u, v); zero for v > u and for negative arguments (scalar or array)."""
        ua = np.asarray(u, dtype=np.int64)
        va = np.asarray(v, dtype=np.int64)
        if np.any(ua > self.n):
            raise ValueError("argument exceeds table size")
        valid = (ua >= 0) & (va >= 0) & (va <= ua)
        out = np.where(valid, self.table[np.clip(ua, 0, self.n), np.clip(va, 0, self.n)], 0.0)
        if np.isscalar(u) and np.isscalar(v):
            return float(out)
        return out


@lru_cache(maxsize=64)
def _cached_binomial(n: int) -> BinomialTable:
    t = np.zeros((n + 1, n + 1))
    t[:, 0] = 1.0
    for u in range(1, n + 1):
        t[u, 1 : u + 1] = t[u - 1, 1 : u + 1] + t[u - 1, 0:u]
    return BinomialTable(n=n, table=_freeze(t))


def binomial_table(n: int) -> BinomialTable:
    """Pascal's-triangle table of C(u, v) for all u, v <= n."""
    if n < 0:
        raise ValueError("table size must be non-negative")
    return _cached_binomial(int(n))


@dataclass(frozen=True)
class CumulativeCountGrid:
    """Double-cumulative counts A(r, s) = #{i : x_rank_i <= r and y_rank_i <= s}."""

    a: np.ndarray
    n: int

    def box_count(self, r_lo: int, r_hi: int, s_lo: int, s_hi: int) -> int:
        """Points with r_lo <= x_rank <= r_hi and s_lo <= y_rank <= s_hi."""
        if r_hi < r_lo or s_hi < s_lo:
            return 0
        a = self.a
        r0, s0 = max(r_lo - 1, 0), max(s_lo - 1, 0)
        r1, s1 = min(r_hi, self.n), min(s_hi, self.n)
        return int(a[r1, s1] - a[r0, s1] - a[r1, s0] + a[r0, s0])

    def inner_count(self, r_lo: int, r_hi: int, s_lo: int, s_hi: int) -> int:
        """Points strictly inside the rank box (r_lo, r_hi) x (s_lo, s_hi)."""
        return self.box_count(r_lo + 1, r_hi - 1, s_lo + 1, s_hi - 1)


def _as_rank_array(sample, name: str) -> np.ndarray:
    if isinstance(sample, RankedSample):
        return sample.ranks
    arr = np.ascontiguousarray(sample, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    _check_permutation(arr)
    return arr


def cumulative_count_grid(x_ranks, y_ranks) -> CumulativeCountGrid:
    """Build the (N+1) x (N+1) cumulative grid from two rank permutations."""
    xr = _as_rank_array(x_ranks, "x_ranks")
    yr = _as_rank_array(y_ranks, "y_ranks")
    if xr.size != yr.size:
        raise ValueError("rank vectors must have equal length")
    n = xr.size
    a = np.zeros((n + 1, n + 1), dtype=np.int64)
    a[xr, yr] = 1
    np.cumsum(a, axis=0, out=a)
    np.cumsum(a, axis=1, out=a)
    return CumulativeCountGrid(a=_freeze(a), n=n)


# Shared lookup tables for the hot vectorized paths.  xlogx(0) := 0 keeps the
# 0*log(0) convention exact in array code.


@lru_cache(maxsize=32)
def _xlogx_table(n: int) -> np.ndarray:
    v = np.arange(n + 1, dtype=float)
    out = np.zeros(n + 1)
    out[1:] = v[1:] * np.log(v[1:])
    return _freeze(out)


@lru_cache(maxsize=32)
def _log_table(n: int) -> np.ndarray:
    out = np.zeros(n + 1)
    out[1:] = np.log(np.arange(1, n + 1, dtype=float))
    return _freeze(out)


@lru_cache(maxsize=32)
def _cell_index_cache(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All 1-d rank cells as (lo, hi) arrays, 1 <= lo <= hi <= n."""
    lo0, hi0 = np.triu_indices(n)
    return _freeze(lo0 + 1), _freeze(hi0 + 1)


@lru_cache(maxsize=1024)
def _pair_index_cache(npos: int) -> tuple[np.ndarray, np.ndarray]:
    """Strictly increasing index pairs (i < j) over npos positions."""
    ii, jj = np.triu_indices(npos, k=1)
    return _freeze(ii), _freeze(jj)
